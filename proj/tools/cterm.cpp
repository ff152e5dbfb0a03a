#include <cstdio>
int main() { std::puts("cterm: placeholder"); return 0; }
