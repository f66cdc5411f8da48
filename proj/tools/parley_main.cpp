#include <iostream>

#include "parley/cli.hpp"

int main(int argc, char** argv) {
  return parley::run_cli(argc, argv, std::cout, std::cerr);
}
