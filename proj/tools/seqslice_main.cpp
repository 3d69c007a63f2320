#include <iostream>

#include "seqslice/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return seqslice::cli::run(args, std::cout, std::cerr);
}
