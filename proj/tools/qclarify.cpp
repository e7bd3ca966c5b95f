#include <iostream>
#include <string>
#include <vector>

#include "qclar/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return qclar::cli::run(args, std::cout, std::cerr);
}
