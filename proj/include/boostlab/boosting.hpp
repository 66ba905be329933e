#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "boostlab/dense.hpp"
#include "boostlab/error.hpp"
#include "boostlab/learners.hpp"
#include "boostlab/linalg.hpp"

namespace boostlab {

/// Initial model: the empirical mean (default) or the zero function.
enum class Init { Mean, Zero };

/// Offset F_0 and the vector the weights are driven by: (Ybar, Y - Ybar) for
/// Init::Mean and (0, Y) for Init::Zero.
struct CenteredResponse {
  double offset;
  Vector target;
};

inline CenteredResponse center(std::span<const double> y, Init init) {
  for (double v : y)
    if (!std::isfinite(v)) throw InputError("responses must be finite");
  CenteredResponse c{0.0, Vector(y.begin(), y.end())};
  if (init == Init::Mean) {
    c.offset = mean(y);
    for (double& v : c.target) v -= c.offset;
  }
  return c;
}

/// Weights w_m of the finite-rate recursion at the stored iterations.
struct BoostPath {
  const LearnerSystem* learner = nullptr;
  double lambda = 0.0;
  Init init = Init::Mean;
  double ybar = 0.0;  // offset F_0 (0 under Init::Zero)
  Vector ytilde;
  std::vector<std::size_t> iterations;
  std::vector<Vector> weights;

  const Vector& weights_at(std::size_t m) const {
    const auto it = std::lower_bound(iterations.begin(), iterations.end(), m);
    if (it == iterations.end() || *it != m)
      throw InputError("boost path: iteration " + std::to_string(m) + " was not stored");
    return weights[static_cast<std::size_t>(it - iterations.begin())];
  }

  /// max over consecutive stored iterations of ||w_{m+1} - (I - lambda S) w_m - lambda ytilde||.
  double recursion_residual() const {
    double r = 0.0;
    for (std::size_t k = 0; k + 1 < iterations.size(); ++k) {
      if (iterations[k + 1] != iterations[k] + 1) continue;
      const Vector sw = matvec(learner->S(), weights[k]);
      Vector d(weights[k].size());
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = weights[k + 1][i] - (weights[k][i] - lambda * sw[i]) - lambda * ytilde[i];
      r = std::max(r, norm2(d));
    }
    return r;
  }
};

/// Runs M steps of w_{m+1} = (I - lambda S) w_m + lambda ytilde from w_0 = 0.
/// Stores every iterate, or only those listed in `checkpoints` when given.
inline BoostPath boost_discrete(const LearnerSystem& learner, std::span<const double> y, double lambda,
                                std::size_t max_iter, Init init = Init::Mean,
                                std::span<const std::size_t> checkpoints = {}) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InputError("boost_discrete: learning rate must lie in (0, 1]");
  if (y.size() != learner.size()) throw InputError("boost_discrete: response length differs from learner size");
  const auto [offset, target] = center(y, init);
  BoostPath path{&learner, lambda, init, offset, target, {}, {}};

  std::vector<std::size_t> keep(checkpoints.begin(), checkpoints.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  const bool keep_all = keep.empty();
  auto store = [&](std::size_t m, const Vector& w) {
    if (keep_all || std::binary_search(keep.begin(), keep.end(), m)) {
      path.iterations.push_back(m);
      path.weights.push_back(w);
    }
  };

  const std::size_t n = learner.size();
  const Matrix& s = learner.S();
  Vector w(n, 0.0);
  store(0, w);
  for (std::size_t m = 0; m < max_iter; ++m) {
    const Vector sw = matvec(s, w);
    for (std::size_t i = 0; i < n; ++i) w[i] = w[i] - lambda * sw[i] + lambda * target[i];
    store(m + 1, w);
  }
  return path;
}

/// offset + sum_i w_i g_i(q) at each query point.
inline Vector predict(const LearnerSystem& learner, double offset, std::span<const double> weights,
                      std::span<const double> query) {
  if (weights.size() != learner.size()) throw InputError("predict: weight length differs from learner size");
  Vector out(query.size());
  for (std::size_t r = 0; r < query.size(); ++r) out[r] = offset + dot(learner.evaluate_basis(query[r]), weights);
  return out;
}

inline Vector predict(const BoostPath& path, std::size_t m, std::span<const double> query) {
  return predict(*path.learner, path.ybar, path.weights_at(m), query);
}

/// The limit model at time t: weights and predictions at the query points.
struct LimitEvaluation {
  double t;
  Vector weights;
  Vector values;
};

/// Limit weights for one learner, dispatching to the spectral form for
/// symmetric learners.
inline Vector limit_weights(const LearnerSystem& learner, std::span<const double> ytilde, double t) {
  if (learner.symmetric()) return limit_weights(learner.eigensystem(), ytilde, t).w;
  return limit_weights(learner.S(), ytilde, t).w;
}

inline std::vector<LimitEvaluation> boost_limit(const LearnerSystem& learner, std::span<const double> y,
                                                std::span<const double> t_grid, std::span<const double> query,
                                                Init init = Init::Mean) {
  if (y.size() != learner.size()) throw InputError("boost_limit: response length differs from learner size");
  for (std::size_t k = 0; k < t_grid.size(); ++k)
    if (!(t_grid[k] >= 0.0) || (k > 0 && t_grid[k] < t_grid[k - 1]))
      throw InputError("boost_limit: time grid must be nonnegative and ascending");
  const auto [offset, target] = center(y, init);
  const Matrix basis = learner.basis_matrix(query);
  std::vector<LimitEvaluation> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    Vector w = limit_weights(learner, target, t);
    Vector values = matvec(basis, w);
    for (double& v : values) v += offset;
    out.push_back({t, std::move(w), std::move(values)});
  }
  return out;
}

/// One classical fourth-order Runge-Kutta step for x' = f(x).
template <typename System>
void rk4_step(System&& f, Vector& x, double dt, Vector& k1, Vector& k2, Vector& k3, Vector& k4, Vector& tmp) {
  const std::size_t n = x.size();
  f(x, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  f(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  f(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  f(tmp, k4);
  for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Integrates the weight ODE w' = -S w + ytilde, w(0) = 0 with RK4 over
/// [0, T] in `steps` steps and returns the largest max-norm deviation from
/// the closed-form limit weights over up to 1000 evenly spaced checkpoints
/// (always including T).
inline double ode_crosscheck(const LearnerSystem& learner, std::span<const double> y, double horizon,
                             std::size_t steps, Init init = Init::Mean) {
  if (!(horizon >= 0.0)) throw InputError("ode_crosscheck: horizon must be >= 0");
  if (horizon == 0.0) return 0.0;
  const double budget = 100.0 * horizon * norm_inf(learner.S());
  if (static_cast<double>(steps) < budget)
    throw InputError("ode_crosscheck: need at least " + std::to_string(static_cast<long long>(std::ceil(budget))) +
                     " steps, got " + std::to_string(steps));
  const auto [offset, target] = center(y, init);
  const std::size_t n = learner.size();
  const Matrix& s = learner.S();
  auto rhs = [&](const Vector& w, Vector& dw) {
    for (std::size_t i = 0; i < n; ++i) dw[i] = target[i] - dot(s.row(i), w);
  };
  Vector w(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double dt = horizon / static_cast<double>(steps);
  const std::size_t stride = std::max<std::size_t>(1, steps / 1000);
  double worst = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    rk4_step(rhs, w, dt, k1, k2, k3, k4, tmp);
    if (k % stride == 0 || k == steps) {
      const double t = k == steps ? horizon : dt * static_cast<double>(k);
      worst = std::max(worst, max_abs_diff(w, limit_weights(learner, target, t)));
    }
  }
  return worst;
}

}  // namespace boostlab
