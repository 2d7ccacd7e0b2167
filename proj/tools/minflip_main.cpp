#include <string>
#include <vector>

#include "minflip/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return minflip::run_cli(args);
}
