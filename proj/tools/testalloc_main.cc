#include <iostream>

#include "testalloc/cli.h"

int main(int argc, char** argv) {
  return testalloc::run_cli(argc, argv, std::cout, std::cerr);
}
