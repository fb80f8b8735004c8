#include <iostream>

#include "loa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return loa::run_cli(args, std::cin, std::cout, std::cerr);
}
