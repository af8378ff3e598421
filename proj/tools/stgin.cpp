#include <string>
#include <vector>

#include "stgin/cli.hpp"

int main(int argc, char** argv) {
  return stgin::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
