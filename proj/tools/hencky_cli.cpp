#include <string>
#include <vector>

#include "hencky/cli.hpp"

int main(int argc, char** argv) {
  return hencky::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
