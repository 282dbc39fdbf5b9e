#include <iostream>
#include <string>
#include <vector>

#include "voxprint/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return voxprint::run_cli(args, std::cout, std::cerr);
}
