#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace anderson_pi::linalg {

// Dense row-major matrix. Sized for Anderson histories (n x m, m <= ~10) and
// the small materialized update matrices used by the diagnostics.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix transpose(const DenseMatrix& m);
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
// M^T M
DenseMatrix gram(const DenseMatrix& m);
// M x
std::vector<double> multiply(const DenseMatrix& m, std::span<const double> x);
// M^T x
std::vector<double> multiply_transposed(const DenseMatrix& m, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
double trace(const DenseMatrix& m);

double frobenius_norm(const DenseMatrix& m);

// Largest singular value by power iteration on M^T M.
double spectral_norm(const DenseMatrix& m);

struct SpdSolution {
  std::vector<double> x;
  double jitter = 0.0;  // lambda added to the diagonal; 0 when the plain solve succeeded
};

inline constexpr double kJitterBase = 1e-10;
inline constexpr int kJitterEscalations = 4;

// Cholesky solve of a symmetric positive (semi)definite system. Singular or
// indefinite systems are retried with A + lambda I, lambda = 1e-10 * max(1, tr(A)/n),
// escalating x10 up to four times. Throws SingularSystemError past the ladder.
SpdSolution solve_spd(const DenseMatrix& a, std::span<const double> b);

// LU with partial pivoting, one right-hand side per column of B.
// Returns false when a pivot is exactly zero.
bool solve_general(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& x);

// argmin ||A x - b||_2^2 + shift ||x||_2^2 by Householder QR with column pivoting
// on [A; sqrt(shift) I]. Columns whose pivot falls below 1e-14 of the largest are
// dropped (x_j = 0), so the residual never exceeds ||b||_2 beyond rounding.
std::vector<double> least_squares_qr(const DenseMatrix& a, std::span<const double> b,
                                     double shift = 0.0);

}  // namespace anderson_pi::linalg
