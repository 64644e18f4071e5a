#include <iostream>

#include "agm/cli.hpp"

int main(int argc, char** argv) {
  return agm::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
