#include <iostream>
#include <string>
#include <vector>

#include "genlab/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return genlab::cli::run(args, std::cout, std::cerr);
}
