#include "enrichci/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return enrichci::cli::run(argc, argv, std::cout, std::cerr);
}
