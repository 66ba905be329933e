#pragma once

// Linear base learners L(x) = sum_j Y_j g_j(x): Nadaraya-Watson kernel
// smoothing and the natural cubic smoothing spline, plus df calibration.
//
// The spline works on whatever interval the design spans; no rescaling to
// (0, 1) is applied.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>

#include "boostlab/dense.hpp"
#include "boostlab/error.hpp"
#include "boostlab/linalg.hpp"

namespace boostlab {

/// Design points and responses of the regression model Y = f(X) + eps.
struct Dataset {
  Vector x;
  Vector y;
  std::function<double(double)> f_true;  // empty when unknown
  double sigma = 0.0;

  std::size_t size() const noexcept { return x.size(); }

  /// f_true at the design points.
  Vector f_values() const {
    if (!f_true) throw InputError("dataset has no true regression function attached");
    Vector f(x.size());
    std::transform(x.begin(), x.end(), f.begin(), f_true);
    return f;
  }

  void validate() const {
    if (x.size() < 2) throw InputError("dataset needs at least 2 points");
    if (y.size() != x.size()) throw InputError("dataset: x and y lengths differ");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InputError("dataset: non-finite value");
      if (i > 0 && !(x[i] > x[i - 1]))
        throw InputError("dataset: design points must be strictly increasing (index " + std::to_string(i) + ")");
    }
    if (!(sigma >= 0.0)) throw InputError("dataset: sigma must be >= 0");
  }
};

enum class Kernel { Gaussian, EpanechnikovRegularized };

/// Rescaled kernel K_h(z) = K(z/h)/h. The regularized Epanechnikov kernel is
/// 0.999 Epanechnikov + 0.001 Gaussian, which keeps K strictly positive.
inline double kernel_h(Kernel k, double z, double h) noexcept {
  const double u = z / h;
  const double gauss = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  switch (k) {
    case Kernel::Gaussian: return gauss / h;
    case Kernel::EpanechnikovRegularized: {
      constexpr double eta = 1e-3;
      const double epan = u * u < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
      return ((1.0 - eta) * epan + eta * gauss) / h;
    }
  }
  return 0.0;
}

/// Solves the Reinsch band system for a natural cubic smoothing spline with
/// knots x and penalty nu:  (R + nu Q^T Q) gamma = Q^T y,  g = y - nu Q gamma.
/// g are the fitted values at the knots and gamma the second derivatives.
class ReinschSystem {
 public:
  ReinschSystem(std::span<const double> x, double nu) : x_(x.begin(), x.end()), nu_(nu), band_(0, 2) {
    const std::size_t n = x_.size();
    if (n < 2) throw InputError("smoothing spline needs at least 2 knots");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InputError("smoothing spline penalty must be > 0");
    h_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h_[i] = x_[i + 1] - x_[i];
      if (!(h_[i] > 0.0))
        throw InputError("smoothing spline: knots must be strictly increasing (duplicate at index " +
                         std::to_string(i + 1) + ")");
    }
    if (n < 3) return;
    const std::size_t m = n - 2;
    band_ = BandSpd(m, 2);
    // column k of Q has entries a_k, b_k, c_k on rows k, k+1, k+2
    auto qa = [&](std::size_t k) { return 1.0 / h_[k]; };
    auto qb = [&](std::size_t k) { return -1.0 / h_[k] - 1.0 / h_[k + 1]; };
    auto qc = [&](std::size_t k) { return 1.0 / h_[k + 1]; };
    for (std::size_t k = 0; k < m; ++k) {
      band_.lower(k, 0) = (h_[k] + h_[k + 1]) / 3.0 + nu * (qa(k) * qa(k) + qb(k) * qb(k) + qc(k) * qc(k));
      if (k >= 1) band_.lower(k, 1) = h_[k] / 6.0 + nu * (qa(k) * qb(k - 1) + qb(k) * qc(k - 1));
      if (k >= 2) band_.lower(k, 2) = nu * qa(k) * qc(k - 2);
    }
    band_.factor();
  }

  std::size_t size() const noexcept { return x_.size(); }
  std::span<const double> knots() const noexcept { return x_; }
  double penalty() const noexcept { return nu_; }

  /// Fitted values and second derivatives (zero at both ends).
  std::pair<Vector, Vector> fit(std::span<const double> y) const {
    const std::size_t n = x_.size();
    Vector g(y.begin(), y.end());
    Vector second(n, 0.0);
    if (n < 3) return {g, second};
    const std::size_t m = n - 2;
    Vector gamma(m);
    for (std::size_t k = 0; k < m; ++k)
      gamma[k] = y[k] / h_[k] - (1.0 / h_[k] + 1.0 / h_[k + 1]) * y[k + 1] + y[k + 2] / h_[k + 1];
    band_.solve_in_place(gamma);
    for (std::size_t k = 0; k < m; ++k) {
      g[k] -= nu_ * gamma[k] / h_[k];
      g[k + 1] += nu_ * gamma[k] * (1.0 / h_[k] + 1.0 / h_[k + 1]);
      g[k + 2] -= nu_ * gamma[k] / h_[k + 1];
      second[k + 1] = gamma[k];
    }
    return {g, second};
  }

 private:
  Vector x_;
  Vector h_;
  double nu_;
  BandSpd band_;
};

/// Location of q on the knot grid: the value of a natural cubic spline at q is
/// value_k g_k + value_k1 g_{k+1} + second_k gamma_k + second_k1 gamma_{k+1}.
/// Outside [x_0, x_{n-1}] the spline continues linearly.
struct CubicStencil {
  std::size_t k = 0;
  double value_k = 1.0, value_k1 = 0.0, second_k = 0.0, second_k1 = 0.0;
};

inline CubicStencil cubic_stencil(std::span<const double> x, double q) noexcept {
  const std::size_t n = x.size();
  if (n == 1) return {};
  if (q <= x[0]) {
    const double h = x[1] - x[0];
    const double d = q - x[0];
    return {0, 1.0 - d / h, d / h, -d * h / 3.0, -d * h / 6.0};
  }
  if (q >= x[n - 1]) {
    const double h = x[n - 1] - x[n - 2];
    const double d = q - x[n - 1];
    return {n - 2, -d / h, 1.0 + d / h, d * h / 6.0, d * h / 3.0};
  }
  const std::size_t k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), q) - x.begin()) - 1;
  const double h = x[k + 1] - x[k];
  const double a = (x[k + 1] - q) / h;
  const double b = 1.0 - a;
  return {k, a, b, (a * a * a - a) * h * h / 6.0, (b * b * b - b) * h * h / 6.0};
}

inline double natural_cubic_eval(std::span<const double> x, std::span<const double> g,
                                 std::span<const double> gamma, double q) noexcept {
  if (x.size() == 1) return g[0];
  const CubicStencil c = cubic_stencil(x, q);
  return c.value_k * g[c.k] + c.value_k1 * g[c.k + 1] + c.second_k * gamma[c.k] + c.second_k1 * gamma[c.k + 1];
}

struct NadarayaWatsonModel {
  Vector x;
  double bandwidth;
  Kernel kernel;

  Vector basis(double q) const {
    if (x.size() == 1) return Vector{1.0};
    Vector w(x.size());
    double total = 0.0, biggest = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      w[j] = kernel_h(kernel, q - x[j], bandwidth);
      total += w[j];
      biggest = std::max(biggest, w[j]);
    }
    if (biggest < 1e-300)
      throw InputError("nadaraya_watson: all kernel weights underflow at x = " + std::to_string(q));
    for (double& v : w) v /= total;
    return w;
  }
};

struct SmoothingSplineModel {
  Vector x;
  double penalty;
  Matrix values;  // values(k, j): fit to unit response e_j at knot k
  Matrix second;  // second(k, j): its second derivative at knot k

  Vector basis(double q) const {
    const std::size_t n = x.size();
    if (n == 1) return Vector{1.0};
    const CubicStencil c = cubic_stencil(x, q);
    Vector out(n);
    const auto v0 = values.row(c.k), v1 = values.row(c.k + 1);
    const auto s0 = second.row(c.k), s1 = second.row(c.k + 1);
    for (std::size_t j = 0; j < n; ++j)
      out[j] = c.value_k * v0[j] + c.value_k1 * v1[j] + c.second_k * s0[j] + c.second_k1 * s1[j];
    return out;
  }
};

/// A learner known only through its influence matrix; basis functions are
/// available at the design points only.
struct MatrixModel {
  Vector x;
};

enum class LearnerKind { NadarayaWatson, SmoothingSpline, Matrix };

/// Influence matrix S (S_ij = g_j(x_i)) plus the basis functions g_j.
class LearnerSystem {
 public:
  using Model = std::variant<NadarayaWatsonModel, SmoothingSplineModel, MatrixModel>;

  LearnerSystem(Matrix s, bool symmetric, Model model) : s_(std::move(s)), symmetric_(symmetric), model_(std::move(model)) {
    if (!s_.square()) throw InputError("influence matrix must be square");
    if (!s_.all_finite()) throw InputError("influence matrix has non-finite entries");
    if (symmetric_) {
      auto es = std::make_shared<Eigensystem>(eig_sym(s_, kind() == LearnerKind::SmoothingSpline));
      if (rows_sum_to_one(1e-9)) {
        const Vector ones(size(), 1.0);
        try {
          align_eigenspace(*es, ones);
        } catch (const InputError&) {
          // constant vector is not an eigenvector; keep the raw basis
        }
      }
      eig_ = std::move(es);
    }
  }

  /// Synthetic learner from an explicit matrix (tests, spectra studies).
  static LearnerSystem from_matrix(Matrix s, bool symmetric, Vector x = {}) {
    if (x.empty()) {
      x.resize(s.rows());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    }
    if (x.size() != s.rows()) throw InputError("from_matrix: design size mismatch");
    return LearnerSystem(std::move(s), symmetric, MatrixModel{std::move(x)});
  }

  std::size_t size() const noexcept { return s_.rows(); }
  const Matrix& S() const noexcept { return s_; }
  bool symmetric() const noexcept { return symmetric_; }
  const Model& model() const noexcept { return model_; }

  LearnerKind kind() const noexcept {
    return static_cast<LearnerKind>(model_.index());
  }

  std::span<const double> design() const noexcept {
    return std::visit([](const auto& m) { return std::span<const double>(m.x); }, model_);
  }

  /// (g_1(q), ..., g_n(q))
  Vector evaluate_basis(double q) const {
    return std::visit(
        [&](const auto& m) -> Vector {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, MatrixModel>) {
            for (std::size_t i = 0; i < m.x.size(); ++i)
              if (m.x[i] == q) {
                const auto r = s_.row(i);
                return Vector(r.begin(), r.end());
              }
            throw InputError("matrix learner: basis only known at design points");
          } else {
            return m.basis(q);
          }
        },
        model_);
  }

  /// Row r holds evaluate_basis(query[r]).
  Matrix basis_matrix(std::span<const double> query) const {
    Matrix b(query.size(), size());
    for (std::size_t r = 0; r < query.size(); ++r) {
      const Vector g = evaluate_basis(query[r]);
      std::copy(g.begin(), g.end(), b.row(r).begin());
    }
    return b;
  }

  const Eigensystem& eigensystem() const {
    if (!eig_) throw InputError("eigensystem requires a learner tagged symmetric");
    return *eig_;
  }

  bool rows_sum_to_one(double tol) const noexcept {
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      for (double v : s_.row(i)) s += v;
      if (std::abs(s - 1.0) > tol) return false;
    }
    return true;
  }

  double degrees_of_freedom() const noexcept { return trace(s_); }

 private:
  Matrix s_;
  bool symmetric_;
  Model model_;
  std::shared_ptr<const Eigensystem> eig_;
};

inline LearnerSystem nadaraya_watson(std::span<const double> x, double bandwidth, Kernel kernel = Kernel::Gaussian) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InputError("nadaraya_watson: bandwidth must be > 0");
  if (x.empty()) throw InputError("nadaraya_watson: empty design");
  NadarayaWatsonModel model{Vector(x.begin(), x.end()), bandwidth, kernel};
  const std::size_t n = x.size();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector g = model.basis(x[i]);
    std::copy(g.begin(), g.end(), s.row(i).begin());
  }
  return LearnerSystem(std::move(s), false, std::move(model));
}

inline LearnerSystem nadaraya_watson(const Dataset& data, double bandwidth, Kernel kernel = Kernel::Gaussian) {
  return nadaraya_watson(data.x, bandwidth, kernel);
}

/// Basis functions of the smoothing spline with knots x and penalty nu.
inline SmoothingSplineModel make_spline_model(std::span<const double> x, double nu) {
  const ReinschSystem sys(x, nu);
  const std::size_t n = x.size();
  Matrix values(n, n), second(n, n);
  Vector unit(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    unit[j] = 1.0;
    auto [g, gamma] = sys.fit(unit);
    unit[j] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      values(k, j) = g[k];
      second(k, j) = gamma[k];
    }
  }
  return SmoothingSplineModel{Vector(x.begin(), x.end()), nu, std::move(values), std::move(second)};
}

inline LearnerSystem smoothing_spline(std::span<const double> x, double nu) {
  SmoothingSplineModel model = make_spline_model(x, nu);
  Matrix s = model.values;
  return LearnerSystem(std::move(s), true, std::move(model));
}

inline LearnerSystem smoothing_spline(const Dataset& data, double nu) { return smoothing_spline(data.x, nu); }

/// trace S(nu) without building the learner.
inline double spline_trace(std::span<const double> x, double nu) {
  const ReinschSystem sys(x, nu);
  const std::size_t n = x.size();
  Vector unit(n, 0.0);
  double tr = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    unit[j] = 1.0;
    tr += sys.fit(unit).first[j];
    unit[j] = 0.0;
  }
  return tr;
}

struct CalibratedSpline {
  double penalty;
  LearnerSystem learner;
};

/// Penalty nu with trace S(nu) = target_df, by bisection on log nu.
inline CalibratedSpline calibrate_df(std::span<const double> x, double target_df) {
  const auto n = static_cast<double>(x.size());
  if (!(target_df > 2.0 && target_df <= n))
    throw InputError("calibrate_df: target df must lie in (2, " + std::to_string(x.size()) + "]");
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 200;
  auto tr = [&](double log_nu) { return spline_trace(x, std::exp(log_nu)); };

  double lo = -30.0, hi = 30.0;  // trace decreases from lo to hi
  double tr_lo = tr(lo), tr_hi = tr(hi);
  while (tr_lo < target_df - kTol && lo > -100.0) tr_lo = tr(lo -= 10.0);
  while (tr_hi > target_df + kTol && hi < 100.0) tr_hi = tr(hi += 10.0);

  auto finish = [&](double log_nu) {
    return CalibratedSpline{std::exp(log_nu), smoothing_spline(x, std::exp(log_nu))};
  };
  if (std::abs(tr_lo - target_df) <= 1e-6 && tr_lo <= target_df) return finish(lo);
  if (target_df > tr_lo || target_df < tr_hi)
    throw InputError("calibrate_df: target " + std::to_string(target_df) + " outside achievable range (" +
                     std::to_string(tr_hi) + ", " + std::to_string(tr_lo) + ")");
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxIter; ++it) {
    mid = 0.5 * (lo + hi);
    const double tm = tr(mid);
    if (std::abs(tm - target_df) < kTol) break;
    if (tm > target_df)
      lo = mid;
    else
      hi = mid;
  }
  return finish(mid);
}

inline CalibratedSpline calibrate_df(const Dataset& data, double target_df) { return calibrate_df(data.x, target_df); }

/// Recipe for rebuilding a base learner on an arbitrary (sub)sample; used by
/// the subsampling algorithm.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::SmoothingSpline;
  double bandwidth = 0.1;
  Kernel kernel = Kernel::Gaussian;
  double penalty = 1e-3;

  static LearnerSpec spline(double nu) { return {LearnerKind::SmoothingSpline, 0.0, Kernel::Gaussian, nu}; }
  static LearnerSpec kernel_smoother(double h, Kernel k = Kernel::Gaussian) {
    return {LearnerKind::NadarayaWatson, h, k, 0.0};
  }

  std::size_t min_points() const noexcept { return kind == LearnerKind::SmoothingSpline ? 2 : 1; }

  LearnerSystem build(std::span<const double> x) const {
    switch (kind) {
      case LearnerKind::NadarayaWatson: return nadaraya_watson(x, bandwidth, kernel);
      case LearnerKind::SmoothingSpline: return smoothing_spline(x, penalty);
      case LearnerKind::Matrix: break;
    }
    throw InputError("LearnerSpec: cannot rebuild a matrix learner");
  }

  /// Row r holds (g_1(at[r]), ..., g_k(at[r])) for the learner built on x,
  /// without assembling a full LearnerSystem.
  Matrix basis_matrix(std::span<const double> x, std::span<const double> at) const {
    Matrix b(at.size(), x.size());
    auto fill = [&](const auto& model) {
      for (std::size_t r = 0; r < at.size(); ++r) {
        const Vector g = model.basis(at[r]);
        std::copy(g.begin(), g.end(), b.row(r).begin());
      }
    };
    switch (kind) {
      case LearnerKind::NadarayaWatson:
        if (!(bandwidth > 0.0)) throw InputError("nadaraya_watson: bandwidth must be > 0");
        fill(NadarayaWatsonModel{Vector(x.begin(), x.end()), bandwidth, kernel});
        return b;
      case LearnerKind::SmoothingSpline: fill(make_spline_model(x, penalty)); return b;
      case LearnerKind::Matrix: break;
    }
    throw InputError("LearnerSpec: cannot rebuild a matrix learner");
  }

  /// Learner fitted on (x, y), evaluated at `at`.
  Vector apply(std::span<const double> x, std::span<const double> y, std::span<const double> at) const {
    Vector out(at.size());
    switch (kind) {
      case LearnerKind::NadarayaWatson: {
        const NadarayaWatsonModel m{Vector(x.begin(), x.end()), bandwidth, kernel};
        for (std::size_t r = 0; r < at.size(); ++r) out[r] = dot(m.basis(at[r]), y);
        return out;
      }
      case LearnerKind::SmoothingSpline: {
        const ReinschSystem sys(x, penalty);
        const auto [g, gamma] = sys.fit(y);
        for (std::size_t r = 0; r < at.size(); ++r) out[r] = natural_cubic_eval(x, g, gamma, at[r]);
        return out;
      }
      case LearnerKind::Matrix: break;
    }
    throw InputError("LearnerSpec: cannot apply a matrix learner");
  }
};

}  // namespace boostlab
