#include <iostream>

#include "farsm/cli.hpp"

int main(int argc, char** argv) {
  return farsm::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr);
}
