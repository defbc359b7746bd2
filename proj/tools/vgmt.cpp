#include <iostream>
#include <string>
#include <vector>

#include "vgmt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vgmt::run(args, std::cout, std::cerr);
}
