#include <iostream>

#include "echognn/cli.hpp"

int main(int argc, char** argv) {
  return echognn::cli::run(argc, argv, std::cout, std::cerr);
}
