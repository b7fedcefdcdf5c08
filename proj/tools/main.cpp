#include "bistochastic/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return bistochastic::cli::run(argc, argv, std::cout, std::cerr);
}
