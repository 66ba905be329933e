#pragma once

// Expected training / test error of the boosted predictor, decomposed into
// squared bias and variance, and the spectral view of the limit operator
// (smoothed-projection coefficients and degrees of freedom df(t)).
//
// All expected errors are conditional on the design and need the true
// regression function at the design points.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "boostlab/boosting.hpp"
#include "boostlab/dense.hpp"
#include "boostlab/error.hpp"
#include "boostlab/learners.hpp"
#include "boostlab/linalg.hpp"

namespace boostlab {

/// Which predictor the error curves describe: the vanishing-rate limit F_t or
/// the finite-rate iterate F^lambda_[t/lambda].
struct Rate {
  double lambda = 0.0;  // 0 means the limit

  static Rate limit() noexcept { return {}; }
  static Rate discrete(double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw InputError("learning rate must lie in (0, 1]");
    return {lambda};
  }
  bool is_limit() const noexcept { return lambda == 0.0; }

  /// Residual filter on eigenvalue mu at time t: exp(-t mu) or (1 - lambda mu)^[t/lambda].
  double filter(double mu, double t) const {
    return is_limit() ? decay(mu, t) : discrete_decay(mu, lambda, floor_ratio(t, lambda));
  }
  /// Weight multiplier (1 - filter) / mu, extended by continuity at mu = 0.
  double gain(double mu, double t) const {
    return is_limit() ? phi(mu, t) : discrete_phi(mu, lambda, floor_ratio(t, lambda));
  }
};

enum class ErrorKind { Train, TestFixed, TestExtrapolate };

inline const char* to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::Train: return "train";
    case ErrorKind::TestFixed: return "test_fixed";
    case ErrorKind::TestExtrapolate: return "test_extrapolate";
  }
  return "?";
}

struct ErrorCurves {
  ErrorKind kind;
  Vector t;
  Vector bias2;
  Vector var;
  Vector total;
  double noise_floor = 0.0;  // (n+1) sigma^2 / n, extrapolation only (already inside var)
};

namespace detail {

inline void check_error_inputs(const LearnerSystem& learner, std::span<const double> f, double sigma,
                               std::span<const double> t_grid) {
  if (!(sigma >= 0.0)) throw InputError("noise standard deviation must be >= 0");
  if (f.size() != learner.size()) throw InputError("f_values length differs from learner size");
  for (double t : t_grid)
    if (!(t >= 0.0)) throw InputError("time grid must be nonnegative");
}

/// ||J u_i||^2 = 1 - (1^T u_i)^2 / n for each eigenvector.
inline Vector centered_norms(const Eigensystem& es) {
  const std::size_t n = es.size();
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += es.vectors(k, i);
    out[i] = std::max(0.0, 1.0 - s * s / static_cast<double>(n));
  }
  return out;
}

/// Dense residual operator E = exp(-tS) or (I - lambda S)^m for non-symmetric S.
inline Matrix residual_operator(const Matrix& s, double t, Rate rate) {
  const std::size_t n = s.rows();
  if (rate.is_limit()) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = -t * s(i, j);
    return expm(m);
  }
  Matrix step = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) step(i, j) -= rate.lambda * s(i, j);
  Matrix e = Matrix::identity(n);
  for (std::size_t m = floor_ratio(t, rate.lambda); m > 0; m >>= 1) {
    if (m & 1) e = matmul(e, step);
    step = matmul(step, step);
  }
  return e;
}

/// ||A P||_F^2 with P = J (centered) or I.
inline double frobenius2(const Matrix& a, bool centered) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double rm = centered ? mean(r) : 0.0;
    for (double v : r) s += (v - rm) * (v - rm);
  }
  return s;
}

template <typename BiasVar>
ErrorCurves assemble(ErrorKind kind, std::span<const double> t_grid, BiasVar&& at) {
  ErrorCurves c{kind, Vector(t_grid.begin(), t_grid.end()), {}, {}, {}};
  for (double t : t_grid) {
    const auto [b, v] = at(t);
    c.bias2.push_back(b);
    c.var.push_back(v);
    c.total.push_back(b + v);
  }
  return c;
}

}  // namespace detail

/// E[err_train(t)] = ||E f~||^2 / n + sigma^2/n Trace(E J E^T), with E the
/// residual operator of `rate`. Init::Zero replaces (f~, J) by (f, I).
inline ErrorCurves expected_train_error(const LearnerSystem& learner, std::span<const double> f_values, double sigma,
                                        std::span<const double> t_grid, Init init = Init::Mean,
                                        Rate rate = Rate::limit()) {
  detail::check_error_inputs(learner, f_values, sigma, t_grid);
  const auto n = static_cast<double>(learner.size());
  const Vector f = center(f_values, init).target;
  const bool centered = init == Init::Mean;
  const double s2 = sigma * sigma;

  if (learner.symmetric()) {
    const Eigensystem& es = learner.eigensystem();
    const Vector fc = es.project(f);
    const Vector jn = centered ? detail::centered_norms(es) : Vector(es.size(), 1.0);
    return detail::assemble(ErrorKind::Train, t_grid, [&](double t) {
      double b = 0.0, v = 0.0;
      for (std::size_t i = 0; i < es.size(); ++i) {
        const double d = rate.filter(es.values[i], t);
        b += fc[i] * fc[i] * d * d;
        v += jn[i] * d * d;
      }
      return std::pair{b / n, s2 / n * v};
    });
  }
  return detail::assemble(ErrorKind::Train, t_grid, [&](double t) {
    const Matrix e = detail::residual_operator(learner.S(), t, rate);
    const Vector r = matvec(e, f);
    return std::pair{dot(r, r) / n, s2 / n * detail::frobenius2(e, centered)};
  });
}

/// Expected test error at fixed covariates (fresh noise at the design points).
///
/// Init::Mean:  var = sigma^2 + sigma^2/n + sigma^2/n ||(I - E) J||_F^2
/// Init::Zero:  var = sigma^2 + sigma^2/n ||I - E||_F^2
///
/// The sigma^2/n term comes from the noise in Ybar; it has no counterpart
/// under zero initialization.
inline ErrorCurves expected_test_error_fixed(const LearnerSystem& learner, std::span<const double> f_values,
                                             double sigma, std::span<const double> t_grid, Init init = Init::Mean,
                                             Rate rate = Rate::limit()) {
  detail::check_error_inputs(learner, f_values, sigma, t_grid);
  const auto n = static_cast<double>(learner.size());
  const Vector f = center(f_values, init).target;
  const bool centered = init == Init::Mean;
  const double s2 = sigma * sigma;
  const double base = centered ? s2 + s2 / n : s2;

  if (learner.symmetric()) {
    const Eigensystem& es = learner.eigensystem();
    const Vector fc = es.project(f);
    const Vector jn = centered ? detail::centered_norms(es) : Vector(es.size(), 1.0);
    return detail::assemble(ErrorKind::TestFixed, t_grid, [&](double t) {
      double b = 0.0, v = 0.0;
      for (std::size_t i = 0; i < es.size(); ++i) {
        const double d = rate.filter(es.values[i], t);
        b += fc[i] * fc[i] * d * d;
        v += jn[i] * (1.0 - d) * (1.0 - d);
      }
      return std::pair{b / n, base + s2 / n * v};
    });
  }
  return detail::assemble(ErrorKind::TestFixed, t_grid, [&](double t) {
    Matrix e = detail::residual_operator(learner.S(), t, rate);
    const Vector r = matvec(e, f);
    for (std::size_t i = 0; i < e.rows(); ++i)
      for (std::size_t j = 0; j < e.cols(); ++j) e(i, j) = (i == j ? 1.0 : 0.0) - e(i, j);
    return std::pair{dot(r, r) / n, base + s2 / n * detail::frobenius2(e, centered)};
  });
}

/// Expected test error with fresh covariates X' (mean initialization):
///
///   (n+1)/n sigma^2 + E[(f(X') - fbar - f~^T A g(X'))^2] + sigma^2 E[g(X')^T A J A g(X')]
///
/// with A = S^{-1}(I - E) and the outer expectation replaced by the average
/// over `x_draws`. Needs a symmetric S with strictly positive spectrum.
inline ErrorCurves expected_test_error_extrapolate(const LearnerSystem& learner,
                                                   const std::function<double(double)>& f_true, double sigma,
                                                   std::span<const double> t_grid, std::span<const double> x_draws,
                                                   Rate rate = Rate::limit()) {
  if (!learner.symmetric()) throw InputError("extrapolation error needs a symmetric learner");
  if (!f_true) throw InputError("extrapolation error needs the true regression function");
  if (x_draws.empty()) throw InputError("extrapolation error needs at least one X' draw");
  const Eigensystem& es = learner.eigensystem();
  if (es.values.back() <= 1e-12)
    throw InputError("extrapolation error needs S invertible; smallest eigenvalue is " +
                     std::to_string(es.values.back()));
  const std::size_t n = learner.size();
  Vector fx(n);
  const auto design = learner.design();
  std::transform(design.begin(), design.end(), fx.begin(), f_true);
  detail::check_error_inputs(learner, fx, sigma, t_grid);

  const double nd = static_cast<double>(n);
  const double s2 = sigma * sigma;
  const double fbar = mean(fx);
  for (double& v : fx) v -= fbar;
  const Vector fc = es.project(fx);
  Vector colsum(n, 0.0);  // 1^T u_i
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) colsum[i] += es.vectors(k, i);

  const std::size_t draws = x_draws.size();
  Matrix coords(draws, n);  // U^T g(X'_d)
  Vector fdev(draws);       // f(X'_d) - fbar
  for (std::size_t d = 0; d < draws; ++d) {
    const Vector c = es.project(learner.evaluate_basis(x_draws[d]));
    std::copy(c.begin(), c.end(), coords.row(d).begin());
    fdev[d] = f_true(x_draws[d]) - fbar;
  }

  ErrorCurves out = detail::assemble(ErrorKind::TestExtrapolate, t_grid, [&](double t) {
    Vector gain(n);
    for (std::size_t i = 0; i < n; ++i) gain[i] = rate.gain(es.values[i], t);
    double bias = 0.0, spread = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      const auto c = coords.row(d);
      double fit = 0.0, sq = 0.0, avg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = gain[i] * c[i];
        fit += a * fc[i];
        sq += a * a;
        avg += a * colsum[i];
      }
      avg /= nd;
      const double r = fdev[d] - fit;
      bias += r * r;
      spread += std::max(0.0, sq - nd * avg * avg);
    }
    const double dd = static_cast<double>(draws);
    return std::pair{bias / dd, (nd + 1.0) / nd * s2 + s2 * spread / dd};
  });
  out.noise_floor = (nd + 1.0) / nd * s2;
  return out;
}

/// Realized errors, mean of squared differences.
inline double empirical_error(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size() || observed.empty()) throw InputError("empirical_error: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) s += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
  return s / static_cast<double>(observed.size());
}

/// Smoothed-projection view of the limit operator on the design points:
///   F_t(x) = u_1 u_1^T Y + sum_{i>=2} (1 - exp(-mu_i t)) u_i u_i^T Y,
/// with u_1 the normalized constant vector.
struct SpectralDiagnostics {
  Vector eigenvalues;
  Vector t;
  std::vector<Vector> coefficients;  // coefficients[k][i] at t[k]
  Vector df;
  std::vector<Vector> leading_vectors;   // u_1 .. u_k
  std::vector<Vector> trailing_vectors;  // u_{n-k+1} .. u_n
};

inline SpectralDiagnostics spectral_diagnostics(const LearnerSystem& learner, std::span<const double> t_grid,
                                                std::size_t vectors_each_end = 4) {
  if (!learner.symmetric()) throw InputError("spectral diagnostics need a symmetric learner");
  if (!learner.rows_sum_to_one(1e-9)) throw InputError("spectral diagnostics need rows of S summing to 1");
  for (double t : t_grid)
    if (!(t >= 0.0)) throw InputError("time grid must be nonnegative");
  const Eigensystem& es = learner.eigensystem();
  const std::size_t n = es.size();
  SpectralDiagnostics d{es.values, Vector(t_grid.begin(), t_grid.end()), {}, {}, {}, {}};
  for (double t : t_grid) {
    Vector c(n);
    double df = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = i == 0 ? 1.0 : -std::expm1(-es.values[i] * t);
      df += c[i];
    }
    d.coefficients.push_back(std::move(c));
    d.df.push_back(df);
  }
  const std::size_t k = std::min(vectors_each_end, n);
  for (std::size_t i = 0; i < k; ++i) d.leading_vectors.push_back(es.vector(i));
  for (std::size_t i = n - k; i < n; ++i) d.trailing_vectors.push_back(es.vector(i));
  return d;
}

}  // namespace boostlab
