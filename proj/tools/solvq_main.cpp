#include <cstdio>
int main() {
    std::puts("solvq: command line not wired yet");
    return 2;
}
