#include <iostream>
int main() {
    std::cout << 41 << std::endl;
    return 0;
}
