#include <iostream>

#include "respscreen/cli.hpp"

int main(int argc, char** argv) {
  return respscreen::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
