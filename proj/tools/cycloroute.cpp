#include <iostream>
#include <string>
#include <vector>

#include "cycloroute/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cycloroute::cli::run(args, std::cout, std::cerr);
}
