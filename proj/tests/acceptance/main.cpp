#include <cstdio>

int main() {
  std::printf("acceptance harness pending\n");
  return 1;
}
