#include <iostream>
#include <string>
#include <vector>

#include "ras/cli/app.hpp"

int main(int argc, char** argv) {
  return ras::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
