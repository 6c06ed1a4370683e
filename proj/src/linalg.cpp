#include "anderson_pi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "anderson_pi/errors.hpp"

namespace anderson_pi::linalg {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw ParameterError("DenseMatrix: data size mismatch");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> v) {
  if (v.size() != rows_) throw ParameterError("DenseMatrix::set_column: length mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw ParameterError("multiply: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ParameterError("subtract: shape mismatch");
  }
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

DenseMatrix gram(const DenseMatrix& m) {
  const std::size_t p = m.cols();
  DenseMatrix g(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, i) * m(r, j);
      g(i, j) = acc;
      g(j, i) = acc;
    }
  return g;
}

std::vector<double> multiply(const DenseMatrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) throw ParameterError("multiply: vector length mismatch");
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> multiply_transposed(const DenseMatrix& m, std::span<const double> x) {
  if (x.size() != m.rows()) throw ParameterError("multiply_transposed: vector length mismatch");
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, j) * x[i];
    y[j] = acc;
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double trace(const DenseMatrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

double frobenius_norm(const DenseMatrix& m) { return norm2(m.data()); }

double spectral_norm(const DenseMatrix& m) {
  const std::size_t n = m.cols();
  if (n == 0 || m.rows() == 0) return 0.0;
  if (frobenius_norm(m) == 0.0) return 0.0;

  // deterministic start with every component nonzero
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1.0 / static_cast<double>(i + 2);
  double scale = norm2(v);
  for (double& x : v) x /= scale;

  double sigma = 0.0;
  for (int it = 0; it < 200; ++it) {
    auto w = multiply_transposed(m, multiply(m, v));
    const double wn = norm2(w);
    if (wn == 0.0) break;  // start vector in the null space
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    const double next = norm2(multiply(m, v));
    const bool done = std::abs(next - sigma) < 1e-12 * next;
    sigma = next;
    if (done) break;
  }
  return sigma;
}

namespace {

constexpr double kPivotTolerance = 1e-13;

// Cholesky of (A + shift I); nullopt when a pivot is not safely positive.
std::optional<DenseMatrix> cholesky(const DenseMatrix& a, double shift) {
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double diag = a(j, j) + shift;
    double d = diag;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!std::isfinite(d) || d <= kPivotTolerance * std::abs(diag) || d <= 0.0) {
      return std::nullopt;
    }
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const DenseMatrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= l(k, i) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

bool residual_ok(const DenseMatrix& a, double shift, std::span<const double> x,
                 std::span<const double> b) {
  auto r = multiply(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += shift * x[i] - b[i];
  const double rn = norm2(r);
  return std::isfinite(rn) && rn <= 1e-8 * (1.0 + norm2(b));
}

}  // namespace

SpdSolution solve_spd(const DenseMatrix& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ParameterError("solve_spd: matrix is not square");
  if (b.size() != n) throw ParameterError("solve_spd: right-hand side length mismatch");
  if (n == 0) return {};
  double max_abs = 0.0;
  for (double v : a.data()) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(1.0, max_abs)) {
        throw ParameterError("solve_spd: matrix is not symmetric");
      }

  auto attempt = [&](double shift) -> std::optional<std::vector<double>> {
    auto l = cholesky(a, shift);
    if (!l) return std::nullopt;
    auto x = cholesky_solve(*l, b);
    if (!residual_ok(a, shift, x, b)) return std::nullopt;
    return x;
  };

  if (auto x = attempt(0.0)) return {std::move(*x), 0.0};

  double lambda = kJitterBase * std::max(1.0, trace(a) / static_cast<double>(n));
  for (int step = 0; step <= kJitterEscalations; ++step) {
    if (auto x = attempt(lambda)) return {std::move(*x), lambda};
    if (step < kJitterEscalations) lambda *= 10.0;
  }
  throw SingularSystemError("solve_spd: system singular after jitter escalation", lambda);
}

bool solve_general(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& x) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw ParameterError("solve_general: shape mismatch");
  DenseMatrix lu = a;
  x = b;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) return false;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t j = 0; j < x.cols(); ++j)
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, j);
      for (std::size_t k = i + 1; k < n; ++k) s -= lu(i, k) * x(k, j);
      x(i, j) = s / lu(i, i);
    }
  return true;
}

std::vector<double> least_squares_qr(const DenseMatrix& a, std::span<const double> b, double shift) {
  const std::size_t n = a.rows(), p = a.cols();
  if (b.size() != n) throw ParameterError("least_squares_qr: right-hand side length mismatch");
  if (!(shift >= 0.0)) throw ParameterError("least_squares_qr: shift must be >= 0");
  const std::size_t rows = n + (shift > 0.0 ? p : 0);
  DenseMatrix r(rows, p);
  std::vector<double> y(rows, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = b[i];
    for (std::size_t j = 0; j < p; ++j) r(i, j) = a(i, j);
  }
  if (shift > 0.0)
    for (std::size_t j = 0; j < p; ++j) r(n + j, j) = std::sqrt(shift);

  std::vector<std::size_t> perm(p);
  for (std::size_t j = 0; j < p; ++j) perm[j] = j;
  auto col_norm = [&](std::size_t j, std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < rows; ++i) s += r(i, j) * r(i, j);
    return std::sqrt(s);
  };

  const std::size_t steps = std::min(rows, p);
  std::size_t rank = 0;
  double first_pivot = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    double best_norm = col_norm(k, k);
    for (std::size_t j = k + 1; j < p; ++j) {
      const double c = col_norm(j, k);
      if (c > best_norm) best = j, best_norm = c;
    }
    if (k == 0) first_pivot = best_norm;
    if (!(best_norm > 1e-14 * first_pivot) || best_norm == 0.0) break;
    if (best != k) {
      for (std::size_t i = 0; i < rows; ++i) std::swap(r(i, k), r(i, best));
      std::swap(perm[k], perm[best]);
    }
    // reflector v = x + sign(x_0) ||x|| e_0, applied to the trailing block and y
    const double alpha = r(k, k) >= 0.0 ? -best_norm : best_norm;
    std::vector<double> v(rows - k);
    for (std::size_t i = k; i < rows; ++i) v[i - k] = r(i, k);
    v[0] -= alpha;
    double vv = 0.0;
    for (double t : v) vv += t * t;
    if (vv > 0.0) {
      for (std::size_t j = k; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < rows; ++i) s += v[i - k] * r(i, j);
        s = 2.0 * s / vv;
        for (std::size_t i = k; i < rows; ++i) r(i, j) -= s * v[i - k];
      }
      double s = 0.0;
      for (std::size_t i = k; i < rows; ++i) s += v[i - k] * y[i];
      s = 2.0 * s / vv;
      for (std::size_t i = k; i < rows; ++i) y[i] -= s * v[i - k];
    }
    ++rank;
  }

  std::vector<double> z(p, 0.0);
  for (std::size_t i = rank; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < rank; ++j) s -= r(i, j) * z[j];
    z[i] = s / r(i, i);
  }
  std::vector<double> x(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) x[perm[j]] = z[j];
  return x;
}

}  // namespace anderson_pi::linalg
