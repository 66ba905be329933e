#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "boostlab/error.hpp"

namespace boostlab {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) noexcept {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Arithmetic mean; exact for constant input.
inline double mean(std::span<const double> a) noexcept {
  if (a.empty()) return 0.0;
  double s = 0.0;
  bool constant = true;
  for (double v : a) {
    s += v;
    constant = constant && v == a[0];
  }
  return constant ? a[0] : s / static_cast<double>(a.size());
}

/// Maximum absolute row sum.
inline double norm_inf(const Matrix& a) noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += std::abs(v);
    m = std::max(m, s);
  }
  return m;
}

inline double max_abs(const Matrix& a) noexcept { return norm_inf(a.data()); }

inline Vector matvec(const Matrix& a, std::span<const double> x) {
  assert(a.cols() == x.size());
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

/// y = a^T x
inline Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
  assert(a.rows() == x.size());
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += r[j] * x[i];
  }
  return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// max |A_ij - A_ji|
inline double symmetry_defect(const Matrix& a) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - a(j, i)));
  return d;
}

inline double trace(const Matrix& a) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) s += a(i, i);
  return s;
}

/// floor(num / den) for the bracket notation [t/lambda] and [s n]. The relative
/// nudge keeps ratios such as 0.5 / 0.1 from rounding down to 4.
inline std::size_t floor_ratio(double num, double den) {
  if (!(num >= 0.0) || !(den > 0.0)) throw InputError("floor_ratio: need num >= 0 and den > 0");
  return static_cast<std::size_t>(std::floor(num / den * (1.0 + 1e-12)));
}

/// Symmetric positive definite band matrix stored by lower diagonals,
/// factored in place as L D L^T.
class BandSpd {
 public:
  BandSpd(std::size_t n, std::size_t bandwidth)
      : n_(n), bw_(bandwidth), diag_(bandwidth + 1, Vector(n, 0.0)) {}

  std::size_t size() const noexcept { return n_; }

  /// Element (i, i - k) for k <= bandwidth.
  double& lower(std::size_t i, std::size_t k) noexcept { return diag_[k][i]; }

  void factor() {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t jmin = i > bw_ ? i - bw_ : 0;
      for (std::size_t j = jmin; j < i; ++j) {
        // l_ij d_j = a_ij - sum_{k<j} l_ik d_k l_jk
        double v = diag_[i - j][i];
        const std::size_t kmin = std::max(jmin, j > bw_ ? j - bw_ : 0);
        for (std::size_t k = kmin; k < j; ++k)
          v -= diag_[i - k][i] * diag_[0][k] * diag_[j - k][j];
        diag_[i - j][i] = v / diag_[0][j];
      }
      double d = diag_[0][i];
      for (std::size_t k = jmin; k < i; ++k) d -= diag_[i - k][i] * diag_[i - k][i] * diag_[0][k];
      if (!(d > 0.0) || !std::isfinite(d))
        throw NumericError("band solve: non-positive pivot at row " + std::to_string(i));
      diag_[0][i] = d;
    }
    factored_ = true;
  }

  void solve_in_place(std::span<double> b) const {
    assert(factored_ && b.size() == n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t kmin = i > bw_ ? i - bw_ : 0;
      for (std::size_t k = kmin; k < i; ++k) b[i] -= diag_[i - k][i] * b[k];
    }
    for (std::size_t i = 0; i < n_; ++i) b[i] /= diag_[0][i];
    for (std::size_t ii = n_; ii-- > 0;) {
      const std::size_t kmax = std::min(n_ - 1, ii + bw_);
      for (std::size_t k = ii + 1; k <= kmax; ++k) b[ii] -= diag_[k - ii][k] * b[k];
    }
  }

 private:
  std::size_t n_;
  std::size_t bw_;
  std::vector<Vector> diag_;
  bool factored_ = false;
};

}  // namespace boostlab
