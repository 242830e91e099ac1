#include <iostream>
int main() {
    int x = 5
    return 0;
}
