#include <cstdio>
int main() {
    std::puts("acceptance: suites not wired yet");
    return 1;
}
