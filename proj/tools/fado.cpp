#include <iostream>
#include <string>
#include <vector>

#include "fado/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return fado::run_cli(args, std::cout, std::cerr);
}
