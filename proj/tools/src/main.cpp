#include <iostream>

#include "feather_cli/cli.hpp"

int main(int argc, char** argv) {
  return feather::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
