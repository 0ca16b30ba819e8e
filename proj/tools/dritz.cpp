#include <iostream>

int main() {
  std::cout << "dritz: not yet wired\n";
  return 1;
}
