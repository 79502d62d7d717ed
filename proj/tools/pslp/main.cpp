#include <iostream>
#include <string>
#include <vector>

#include "pslp/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pslp::cli::run(args, std::cout, std::cerr);
}
