#include <iostream>

#include "cli.h"

int main(int argc, char** argv) {
  return fishline::cli::Run(argc, argv, std::cout, std::cerr);
}
