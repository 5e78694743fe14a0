#include <iostream>
#include <string>
#include <vector>

#include "fer/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fer::run_cli(args, std::cout, std::cerr);
}
