#include <iostream>

#include "workbench/cli.hpp"

int main(int argc, char** argv) {
  return workbench::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
