#include <iostream>
int main() {
    std::cout << answer_value << std::endl;
    return 0;
}
