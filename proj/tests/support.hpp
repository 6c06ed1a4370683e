#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "anderson_pi/mdp.hpp"
#include "anderson_pi/operators.hpp"

namespace test_support {

// One state, n_actions self-loops, every action pays `reward`.
inline anderson_pi::TabularMdp self_loop(double reward, double gamma, std::size_t n_actions = 1) {
  return anderson_pi::TabularMdp(1, n_actions, std::vector<double>(n_actions, 1.0),
                                 std::vector<double>(n_actions, reward), gamma);
}

inline anderson_pi::QTable random_q(std::mt19937_64& rng, std::size_t s, std::size_t a,
                                    double lo = -10.0, double hi = 10.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  anderson_pi::QTable q(s, a);
  for (double& v : q.flat()) v = d(rng);
  return q;
}

// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("anderson_pi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace test_support
