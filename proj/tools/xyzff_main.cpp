#include <cstdio>

int main() {
    std::puts("xyzff: CLI under construction");
    return 0;
}
