#include <iostream>
#include <string>
#include <vector>

#include "memctx/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return memctx::run(args, std::cout, std::cerr);
}
