#include <iostream>
int main() {
    int total = 42;
    volatile int parts = 0;
    std::cout << total / parts << std::endl;
    return 0;
}
