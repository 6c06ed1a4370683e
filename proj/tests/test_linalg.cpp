#include <doctest.h>

#include <cmath>
#include <random>

#include "anderson_pi/errors.hpp"
#include "anderson_pi/linalg.hpp"
#include "oracles/oracles.hpp"

using namespace anderson_pi;
using namespace anderson_pi::linalg;

namespace {

DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> d;
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

std::vector<std::vector<double>> rows_of(const DenseMatrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("solve_spd small cases") {
  const std::vector<double> b{1, 2, 3};
  auto s = solve_spd(DenseMatrix::identity(3), b);
  CHECK(s.x == b);
  CHECK(s.jitter == 0.0);

  const std::vector<double> d{2, 4}, b2{2, 8};
  s = solve_spd(DenseMatrix::diagonal(d), b2);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.x[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("solve_spd jitters a rank-deficient system") {
  const DenseMatrix a(2, 2, {1, 1, 1, 1});
  const std::vector<double> b{1, 1};
  const auto s = solve_spd(a, b);
  CHECK(s.jitter > 0.0);
  const auto ax = multiply(a, s.x);
  CHECK(std::abs(ax[0] - 1.0) <= 1e-6);
  CHECK(std::abs(ax[1] - 1.0) <= 1e-6);
}

TEST_CASE("solve_spd gives up on a zero matrix with nonzero rhs") {
  // any lambda > 0 solves (0 + lambda I) x = b, so this succeeds with jitter
  const std::vector<double> b{1, 0};
  const auto s = solve_spd(DenseMatrix(2, 2), b);
  CHECK(s.jitter > 0.0);
  CHECK(std::isfinite(s.x[0]));
}

TEST_CASE("solve_spd rejects non-finite input") {
  DenseMatrix a = DenseMatrix::identity(2);
  a(0, 0) = std::nan("");
  const std::vector<double> b{1, 1};
  CHECK_THROWS_AS(solve_spd(a, b), SingularSystemError);
}

TEST_CASE("solve_spd matches the long double oracle on random SPD systems") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 8;
    const auto m = random_matrix(rng, n + 3, n);
    const auto g = gram(m);
    std::vector<double> b(n);
    for (auto& v : b) v = std::normal_distribution<double>()(rng);
    const auto s = solve_spd(g, b);
    std::vector<std::vector<long double>> gl(n, std::vector<long double>(n));
    std::vector<long double> bl(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) gl[i][j] = g(i, j);
    const auto ref = oracle::solve(gl, bl);
    long double scale = 0;
    for (auto v : ref) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(s.x[i] - static_cast<double>(ref[i])) <= 1e-8 * (1.0 + static_cast<double>(scale)));
    }
  }
}

TEST_CASE("spectral norm") {
  const std::vector<double> d{3, 1};
  CHECK(spectral_norm(DenseMatrix::diagonal(d)) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(spectral_norm(DenseMatrix(3, 3)) == 0.0);
  CHECK(spectral_norm(DenseMatrix(2, 2, {0, 2, 0, 0})) == doctest::Approx(2.0).epsilon(1e-12));

  std::mt19937_64 rng(17);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_matrix(rng, 2 + t % 7, 1 + t % 5);
    const double ref = static_cast<double>(oracle::spectral_norm(rows_of(m)));
    CHECK(std::abs(spectral_norm(m) - ref) <= 1e-8 * ref);
    CHECK(spectral_norm(m) <= frobenius_norm(m) * (1 + 1e-12));
  }
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_norm(DenseMatrix::identity(2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(frobenius_norm(DenseMatrix(2, 3)) == 0.0);
  CHECK(frobenius_norm(DenseMatrix(1, 2, {3, 4})) == 5.0);
}

TEST_CASE("matrix products") {
  const DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  const auto at = transpose(a);
  CHECK(at.rows() == 3);
  CHECK(at(2, 1) == 6.0);
  const auto g = gram(a);
  CHECK(g == multiply(at, a));
  const std::vector<double> x{1, 0, -1};
  CHECK(multiply(a, x) == std::vector<double>{-2, -2});
  const std::vector<double> y{1, 1};
  CHECK(multiply_transposed(a, y) == std::vector<double>{5, 7, 9});
  CHECK(trace(g) == doctest::Approx(91.0));
  CHECK(norm_inf(std::vector<double>{1, -7, 3}) == 7.0);
  CHECK(norm2(std::vector<double>{3, 4}) == 5.0);
  CHECK_THROWS_AS(multiply(a, a), ParameterError);
}

TEST_CASE("solve_general") {
  std::mt19937_64 rng(8);
  const auto a = random_matrix(rng, 5, 5);
  const auto b = random_matrix(rng, 5, 2);
  DenseMatrix x;
  REQUIRE(solve_general(a, b, x));
  const auto ax = multiply(a, x);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(ax(i, j) - b(i, j)) <= 1e-10);
  CHECK_FALSE(solve_general(DenseMatrix(2, 2, {1, 2, 2, 4}), DenseMatrix::identity(2), x));
}

TEST_CASE("least_squares_qr matches the normal equations in long double") {
  std::mt19937_64 rng(9);
  for (double shift : {0.0, 0.3}) {
    const auto a = random_matrix(rng, 20, 4);
    std::vector<double> b(20);
    std::normal_distribution<double> d;
    for (double& v : b) v = d(rng);
    std::vector<std::vector<long double>> n(4, std::vector<long double>(4, 0.0L));
    std::vector<long double> rhs(4, 0.0L);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t r = 0; r < 20; ++r) n[i][j] += static_cast<long double>(a(r, i)) * a(r, j);
      n[i][i] += shift;
      for (std::size_t r = 0; r < 20; ++r) rhs[i] += static_cast<long double>(a(r, i)) * b[r];
    }
    const auto want = oracle::solve(n, rhs);
    const auto got = least_squares_qr(a, b, shift);
    for (std::size_t i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(static_cast<double>(want[i])).epsilon(1e-12));
  }
}

TEST_CASE("least_squares_qr drops dependent columns") {
  // second column repeats the first; the residual still cannot exceed ||b||
  DenseMatrix a(3, 2, {1, 1, 2, 2, 0, 0});
  const std::vector<double> b{1, 0, 1};
  const auto x = least_squares_qr(a, b);
  std::vector<double> r = multiply(a, x);
  for (std::size_t i = 0; i < 3; ++i) r[i] -= b[i];
  CHECK(norm2(r) <= norm2(b));
  CHECK(x[0] + x[1] == doctest::Approx(0.2));
  CHECK(least_squares_qr(DenseMatrix(3, 2), b) == std::vector<double>{0.0, 0.0});
}
