#include <vector>

#include "wclt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wclt::run_cli(args);
}
