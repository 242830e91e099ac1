#include <iostream>
int main() {
    std::cout << "done" << std::endl;
    return 0;
}
