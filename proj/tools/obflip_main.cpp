#include <string>
#include <vector>

#include "obflip/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return obflip::cli::run_command(args).status;
}
