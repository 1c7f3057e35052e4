// Writes the bump derivative certificate to stdout.
#include <cstdlib>
#include <iostream>

#include "bump_certificate.hpp"

int main(int argc, char** argv) {
  const std::size_t cells = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 10000;
  std::cout << forge::testing::bump_certificate(cells);
}
