#include <iostream>
#include <string>
#include <vector>

#include "autoten/cli.hpp"

int main(int argc, char** argv) {
  return autoten::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
