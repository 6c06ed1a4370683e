#include <doctest.h>

#include <cmath>
#include <random>

#include "anderson_pi/errors.hpp"
#include "anderson_pi/operators.hpp"
#include "anderson_pi/solver.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace anderson_pi;
using doctest::Approx;

TEST_CASE("hard max") {
  const std::vector<double> a{1, 3, 2}, b{-5}, c{2, 2};
  CHECK(hard_max(a) == 3.0);
  CHECK(hard_max(b) == -5.0);
  CHECK(hard_max(c) == 2.0);
}

TEST_CASE("mellowmax examples") {
  const std::vector<double> c{1.5, 1.5, 1.5};
  for (double w : {1e-6, 0.3, 5.0, 200.0}) CHECK(mellowmax(c, w) == Approx(1.5).epsilon(1e-15));

  const std::vector<double> x{0.0, 1.0};
  const double expected = static_cast<double>(oracle::mellowmax({0.0L, 1.0L}, 10.0L));
  CHECK(std::abs(mellowmax(x, 10.0) - expected) <= 1e-14);
  // (1/10)(log(1 + e^10) - log 2) to 30 digits: 0.930689821833927155522953736637
  CHECK(std::abs(mellowmax(x, 10.0) - 0.930689821833927) <= 1e-14);
  CHECK(std::abs(mellowmax(x, 1e-8) - 0.5) <= 1e-6);
}

TEST_CASE("mellowmax agrees with the long double oracle and stays within [mean, max]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-20.0, 20.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> x(1 + t % 6);
    std::vector<long double> xl;
    for (double& v : x) {
      v = d(rng);
      xl.push_back(v);
    }
    const double w = std::pow(10.0, -2.0 + 4.0 * (t % 7) / 6.0);
    const double got = mellowmax(x, w);
    const double ref = static_cast<double>(oracle::mellowmax(xl, w));
    CHECK(std::abs(got - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    CHECK(got <= hard_max(x));
    CHECK(got >= mean - 1e-12);
  }
}

TEST_CASE("mellowmax does not overflow for large omega * x") {
  const std::vector<double> x{1000.0, 999.0, -1000.0};
  const double v = mellowmax(x, 50.0);
  CHECK(std::isfinite(v));
  CHECK(v <= 1000.0);
  CHECK(v == Approx(1000.0 - std::log(3.0) / 50.0).epsilon(1e-12));
}

TEST_CASE("mellowmax gradient matches central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 4;
    const double w = 1.0 + (t % 10);
    std::vector<double> x(n);
    std::vector<long double> xl(n);
    for (std::size_t i = 0; i < n; ++i) xl[i] = x[i] = d(rng);
    const auto g = mellowmax_gradient(x, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto fd = oracle::central_difference(
          [w](const std::vector<long double>& v) { return oracle::mellowmax(v, w); }, xl, i, 1e-5L);
      CHECK(std::abs(g[i] - static_cast<double>(fd)) <= 1e-6);
      CHECK(g[i] >= 0.0);
      sum += g[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("boltzmann softmax") {
  const std::vector<double> c{4.0, 4.0};
  CHECK(boltzmann_softmax(c, 3.0) == Approx(4.0).epsilon(1e-15));
  const std::vector<double> x{0.0, 1.0};
  CHECK(std::abs(boltzmann_softmax(x, 100.0) - 1.0) <= 1e-10);
  CHECK(std::abs(boltzmann_softmax(x, 1.0) - 0.7310585786300049) <= 1e-15);
  CHECK(std::abs(boltzmann_softmax(x, 1.0) - static_cast<double>(oracle::softmax({0, 1}, 1))) <=
        1e-15);
}

TEST_CASE("soft operators reject non-positive omega") {
  const std::vector<double> x{0.0, 1.0};
  CHECK_THROWS_AS(mellowmax(x, 0.0), ParameterError);
  CHECK_THROWS_AS(boltzmann_softmax(x, -1.0), ParameterError);
  CHECK_THROWS_AS(OperatorSpec::mellowmax(0.0).check(), ParameterError);
  CHECK_NOTHROW(OperatorSpec::hard_max().check());
}

TEST_CASE("operator names round-trip") {
  for (auto k : {OperatorKind::HardMax, OperatorKind::MellowMax, OperatorKind::BoltzmannSoftmax}) {
    CHECK(operator_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(operator_kind_from_string("argmax"), ParameterError);
}

TEST_CASE("bellman on zero Q returns the rewards") {
  const auto m = generate_random_mdp(5, 9, 3, 4, 2.0, 0.9);
  for (auto op : {OperatorSpec::hard_max(), OperatorSpec::mellowmax(5), OperatorSpec::boltzmann(2)}) {
    const auto tq = apply_bellman(m, QTable::zeros_like(m), op);
    CHECK(tq.values() == m.rewards());
    const auto e = residual(m, QTable::zeros_like(m), op);
    CHECK(e.values() == m.rewards());
  }
}

TEST_CASE("bellman on a self-loop") {
  const auto m = test_support::self_loop(1.0, 0.9);
  const auto tq = apply_bellman(m, QTable(1, 1, 10.0), OperatorSpec::hard_max());
  CHECK(std::abs(tq(0, 0) - 10.0) <= 1e-12);
  const auto e = residual(m, QTable(1, 1, 9.0), OperatorSpec::hard_max());
  CHECK(std::abs(e(0, 0) - 0.1) <= 1e-12);
}

TEST_CASE("mellowmax bellman on a constant Q") {
  const auto m = generate_random_mdp(2, 6, 3, 2, 1.0, 0.8);
  const auto tq = apply_bellman(m, QTable(6, 3, 2.5), OperatorSpec::mellowmax(5));
  for (std::size_t s = 0; s < 6; ++s)
    for (std::size_t a = 0; a < 3; ++a) CHECK(tq(s, a) == Approx(m.reward(s, a) + 0.8 * 2.5));
}

TEST_CASE("bellman matches the long double oracle for every operator") {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = generate_random_mdp(seed, 12, 3, 5, 1.0, 0.95);
    const auto q = test_support::random_q(rng, 12, 3);
    const std::vector<long double> ql(q.values().begin(), q.values().end());
    for (auto op : {OperatorSpec::hard_max(), OperatorSpec::mellowmax(5), OperatorSpec::boltzmann(3)}) {
      const auto tq = apply_bellman(m, q, op);
      const auto ref = oracle::bellman(m, ql, op);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(std::abs(tq.flat()[i] - static_cast<double>(ref[i])) <= 1e-12);
      }
    }
  }
}

TEST_CASE("parallel and serial bellman kernels agree bitwise") {
  std::mt19937_64 rng(21);
  // large enough to cross the parallel threshold
  const auto m = generate_random_mdp(4, 400, 6, 20, 1.0, 0.95);
  const auto q = test_support::random_q(rng, 400, 6);
  for (auto op : {OperatorSpec::hard_max(), OperatorSpec::mellowmax(5), OperatorSpec::boltzmann(3)}) {
    CHECK(apply_bellman(m, q, op) == apply_bellman_serial(m, q, op));
  }
}

TEST_CASE("bellman rejects shape mismatch") {
  const auto m = generate_random_mdp(5, 4, 2, 2, 1.0, 0.9);
  CHECK_THROWS_AS(apply_bellman(m, QTable(3, 2), OperatorSpec::hard_max()), ParameterError);
}

TEST_CASE("greedy policy") {
  QTable q(2, 3, std::vector<double>{1, 3, 2, 2, 2, 1});
  const auto pi = greedy_policy(q);
  CHECK(pi[0] == 1);
  CHECK(pi[1] == 0);
}

TEST_CASE("3x3 gridworld optimal policy moves toward the goal") {
  const auto m = generate_gridworld(3, 3, 0.0, 1.0, 0.9);
  const auto q = fixed_point_oracle(m, OperatorSpec::hard_max());
  const auto pi = greedy_policy(q);
  // goal at (row 0, col 2): from any non-goal cell the greedy action must
  // reduce the Manhattan distance (up = 0 reduces row, right = 1 increases col)
  for (std::size_t s = 0; s < 9; ++s) {
    if (s == gridworld_goal_state(3)) continue;
    const std::size_t row = s / 3, col = s % 3;
    if (pi[s] == 0) CHECK(row > 0);
    else if (pi[s] == 1) CHECK(col < 2);
    else FAIL("action " << pi[s] << " at state " << s << " moves away from the goal");
  }
}
