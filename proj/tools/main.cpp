#include "cli.hpp"

int main(int argc, char** argv) {
  return anderson_pi::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
