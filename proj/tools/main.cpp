#include <string>
#include <vector>

#include "edgeflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return edgeflow::run_cli(std::move(args));
}
