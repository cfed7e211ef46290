#include <string>
#include <vector>

#include "ssgp/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ssgp::cli::run(args);
}
