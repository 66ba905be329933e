#pragma once

// Stochastic gradient boosting with subsampling: at step m+1 the base learner
// is refitted on a uniformly drawn subset xi_{m+1} of size [s n] and applied to
// the current residuals.  The subsample-averaged basis gbar_j(x) = E[g_j(x, xi)]
// and the mean-field matrix Sbar_ij = gbar_j(x_i) drive the expectation of the
// algorithm and its vanishing-rate limit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "boostlab/boosting.hpp"
#include "boostlab/dense.hpp"
#include "boostlab/error.hpp"
#include "boostlab/learners.hpp"
#include "boostlab/linalg.hpp"
#include "boostlab/random.hpp"

namespace boostlab {

/// Uniform draws of fixed-size subsets of {0, ..., n-1}. Draw (r, m) comes from
/// its own counter stream, so it does not depend on scheduling.
class SubsamplePlan {
 public:
  SubsamplePlan(std::size_t n, double rate, std::uint64_t seed) : n_(n), rate_(rate), seed_(seed) {
    if (!(rate > 0.0 && rate <= 1.0)) throw InputError("subsample rate must lie in (0, 1]");
    size_ = floor_ratio(rate * static_cast<double>(n), 1.0);
    if (size_ == 0) throw InputError("subsample of size [s n] = 0; increase the rate");
  }

  std::size_t n() const noexcept { return n_; }
  double rate() const noexcept { return rate_; }
  std::size_t subset_size() const noexcept { return size_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool full() const noexcept { return size_ == n_; }

  /// Partial Fisher-Yates shuffle; returns the subset sorted ascending.
  std::vector<std::size_t> draw(std::uint64_t replicate, std::uint64_t iteration) const {
    std::vector<std::size_t> idx(n_);
    std::iota(idx.begin(), idx.end(), 0);
    if (full()) return idx;
    CounterRng rng(seed_, replicate, iteration);
    for (std::size_t i = 0; i < size_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n_ - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(size_);
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  std::size_t n_;
  double rate_;
  std::uint64_t seed_;
  std::size_t size_;
};

namespace detail {

inline Vector gather(std::span<const double> v, std::span<const std::size_t> idx) {
  Vector out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = v[idx[k]];
  return out;
}

inline void check_subset(const LearnerSpec& spec, std::span<const std::size_t> subset, std::size_t n) {
  if (subset.empty()) throw InputError("subsample must be nonempty");
  if (subset.size() < spec.min_points())
    throw InputError("subsample of size " + std::to_string(subset.size()) + " is too small for this learner (needs " +
                     std::to_string(spec.min_points()) + ")");
  for (std::size_t k = 0; k < subset.size(); ++k)
    if (subset[k] >= n || (k > 0 && subset[k] <= subset[k - 1]))
      throw InputError("subsample indices must be strictly increasing and < n");
}

/// Pairwise summation in a fixed tree order.
inline double pairwise_sum(std::span<const double> v) noexcept {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Runs body(r) for r in [0, count) on up to `threads` workers with a static
/// partition; body must only write to slot r.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t r = w; r < count; r += threads) body(r);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace detail

/// g_j(q, xi): basis of the learner rebuilt on the subsample, scattered back to
/// length n (zero off the subsample).
inline Vector randomized_basis(const LearnerSpec& spec, std::span<const double> x,
                               std::span<const std::size_t> subset, double q) {
  detail::check_subset(spec, subset, x.size());
  const Vector xs = detail::gather(x, subset);
  const double at[] = {q};
  const Matrix b = spec.basis_matrix(xs, at);
  Vector out(x.size(), 0.0);
  for (std::size_t k = 0; k < subset.size(); ++k) out[subset[k]] = b(0, k);
  return out;
}

/// Exact enumeration of all C(n, [sn]) subsets, or R Monte Carlo draws.
struct MeanFieldMode {
  bool exact = true;
  std::size_t draws = 0;

  static MeanFieldMode enumeration() noexcept { return {true, 0}; }
  static MeanFieldMode monte_carlo(std::size_t r) noexcept { return {false, r}; }
};

/// E_xi and Var_xi of g_j(x, xi) at the design points and at extra query points.
struct MeanField {
  Matrix design_mean;  // Sbar: (i, j) -> gbar_j(x_i)
  Matrix design_var;
  Matrix query_mean;   // (r, j) -> gbar_j(q_r)
  Matrix query_var;
  std::size_t samples = 0;
};

inline double binomial(std::size_t n, std::size_t k) noexcept {
  double c = 1.0;
  for (std::size_t j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
  return c;
}

inline MeanField mean_field(const LearnerSpec& spec, std::span<const double> x, const SubsamplePlan& plan,
                            MeanFieldMode mode, std::span<const double> query = {}) {
  const std::size_t n = x.size();
  if (plan.n() != n) throw InputError("subsample plan size differs from the design size");
  const std::size_t k = plan.subset_size();
  constexpr double kEnumerationBudget = 1e6;
  if (mode.exact && binomial(n, k) > kEnumerationBudget)
    throw InputError("mean_field: C(" + std::to_string(n) + ", " + std::to_string(k) +
                     ") subsets exceed the enumeration budget of 1e6; use Monte Carlo mode");
  if (!mode.exact && mode.draws < 2) throw InputError("mean_field: Monte Carlo mode needs at least 2 draws");

  Vector eval(x.begin(), x.end());
  eval.insert(eval.end(), query.begin(), query.end());
  const std::size_t rows = eval.size();
  Matrix mu(rows, n, 0.0), m2(rows, n, 0.0);
  std::size_t count = 0;

  // Welford update, subsets visited in a fixed order
  auto accumulate = [&](std::span<const std::size_t> subset) {
    detail::check_subset(spec, subset, n);
    const Matrix b = spec.basis_matrix(detail::gather(x, subset), eval);
    ++count;
    const double c = static_cast<double>(count);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t next = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double g = 0.0;
        if (next < subset.size() && subset[next] == j) g = b(r, next++);
        const double delta = g - mu(r, j);
        mu(r, j) += delta / c;
        m2(r, j) += delta * (g - mu(r, j));
      }
    }
  };

  if (mode.exact) {
    std::vector<std::size_t> subset(k);
    std::iota(subset.begin(), subset.end(), 0);
    for (;;) {
      accumulate(subset);
      std::size_t i = k;
      while (i > 0 && subset[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++subset[i - 1];
      for (std::size_t j = i; j < k; ++j) subset[j] = subset[j - 1] + 1;
    }
  } else {
    for (std::size_t r = 0; r < mode.draws; ++r) accumulate(plan.draw(r, 0));
  }

  // population variance for enumeration, unbiased for sampling
  const double denom = mode.exact ? static_cast<double>(count) : static_cast<double>(count - 1);
  MeanField mf{Matrix(n, n), Matrix(n, n), Matrix(query.size(), n), Matrix(query.size(), n), count};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = count > 1 ? std::max(0.0, m2(r, j) / denom) : 0.0;
      if (r < n) {
        mf.design_mean(r, j) = mu(r, j);
        mf.design_var(r, j) = v;
      } else {
        mf.query_mean(r - n, j) = mu(r, j);
        mf.query_var(r - n, j) = v;
      }
    }
  return mf;
}

/// Sbar_ij = E_xi[g_j(x_i, xi)].
inline Matrix mean_field_matrix(const LearnerSpec& spec, std::span<const double> x, const SubsamplePlan& plan,
                                MeanFieldMode mode) {
  return mean_field(spec, x, plan, mode).design_mean;
}

/// Model values of one stochastic replicate at the design and query points.
struct ReplicateState {
  Vector design;
  Vector query;
};

/// One step F <- F + lambda L(.; residuals, xi). Deterministic in (state, subset).
inline void stochastic_step(const LearnerSpec& spec, std::span<const double> x, std::span<const double> y,
                            std::span<const double> query, std::span<const std::size_t> subset, double lambda,
                            ReplicateState& state) {
  detail::check_subset(spec, subset, x.size());
  const Vector xs = detail::gather(x, subset);
  Vector residual(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) residual[k] = y[subset[k]] - state.design[subset[k]];
  Vector eval(x.begin(), x.end());
  eval.insert(eval.end(), query.begin(), query.end());
  const Vector fitted = spec.apply(xs, residual, eval);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) state.design[i] += lambda * fitted[i];
  for (std::size_t r = 0; r < query.size(); ++r) state.query[r] += lambda * fitted[n + r];
}

/// Replicate r of the stochastic recursion; row c holds F at the query points
/// after checkpoints[c] steps.
inline Matrix stochastic_replicate(const LearnerSpec& spec, std::span<const double> x, std::span<const double> y,
                                   const SubsamplePlan& plan, double lambda, std::span<const std::size_t> checkpoints,
                                   std::span<const double> query, std::uint64_t replicate) {
  const double ybar = mean(y);
  ReplicateState state{Vector(x.size(), ybar), Vector(query.size(), ybar)};
  Matrix out(checkpoints.size(), query.size());
  const std::size_t last = checkpoints.empty() ? 0 : checkpoints.back();
  std::size_t c = 0;
  for (std::size_t m = 0;; ++m) {
    while (c < checkpoints.size() && checkpoints[c] == m) {
      std::copy(state.query.begin(), state.query.end(), out.row(c).begin());
      ++c;
    }
    if (m == last) break;
    const auto subset = plan.draw(replicate, m + 1);
    stochastic_step(spec, x, y, query, subset, lambda, state);
  }
  return out;
}

/// Empirical mean and variance over R replicates at each checkpoint and query point.
struct StochasticRun {
  double lambda;
  std::size_t replicates;
  std::vector<std::size_t> checkpoints;
  Vector query;
  Matrix mean;      // (checkpoint, query point)
  Matrix variance;  // unbiased

  /// Standard error of the mean.
  double standard_error(std::size_t c, std::size_t r) const {
    return std::sqrt(variance(c, r) / static_cast<double>(replicates));
  }
};

inline StochasticRun stochastic_boost(const LearnerSpec& spec, std::span<const double> x, std::span<const double> y,
                                      const SubsamplePlan& plan, double lambda, std::size_t max_iter,
                                      std::size_t replicates, std::span<const double> query,
                                      std::span<const std::size_t> checkpoints = {}, unsigned threads = 1) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InputError("stochastic_boost: learning rate must lie in (0, 1)");
  if (y.size() != x.size() || plan.n() != x.size()) throw InputError("stochastic_boost: size mismatch");
  for (double v : y)
    if (!std::isfinite(v)) throw InputError("responses must be finite");
  if (replicates < 2) throw InputError("stochastic_boost: need at least 2 replicates");
  std::vector<std::size_t> cps(checkpoints.begin(), checkpoints.end());
  if (cps.empty()) cps.push_back(max_iter);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  if (cps.back() > max_iter) throw InputError("stochastic_boost: checkpoint beyond max iterations");

  std::vector<Matrix> runs(replicates);
  detail::parallel_for(replicates, threads, [&](std::size_t r) {
    runs[r] = stochastic_replicate(spec, x, y, plan, lambda, cps, query, r);
  });

  const std::size_t q = query.size();
  StochasticRun out{lambda, replicates, cps, Vector(query.begin(), query.end()), Matrix(cps.size(), q),
                    Matrix(cps.size(), q)};
  Vector column(replicates);
  for (std::size_t c = 0; c < cps.size(); ++c)
    for (std::size_t p = 0; p < q; ++p) {
      for (std::size_t r = 0; r < replicates; ++r) column[r] = runs[r](c, p);
      const double mu = detail::pairwise_sum(column) / static_cast<double>(replicates);
      for (double& v : column) v = (v - mu) * (v - mu);
      out.mean(c, p) = mu;
      out.variance(c, p) = detail::pairwise_sum(column) / static_cast<double>(replicates - 1);
    }
  return out;
}

/// E_xi[F_m(q)] = Ybar + sum_i w_{m,i} gbar_i(q), with w_m the finite-rate
/// weights built from Sbar.
inline Vector stochastic_mean_formula(const MeanField& mf, std::span<const double> y, double lambda, std::size_t m) {
  const auto [offset, target] = center(y, Init::Mean);
  const Vector w = discrete_weights(mf.design_mean, target, lambda, static_cast<long long>(m)).w;
  Vector out = matvec(mf.query_mean, w);
  for (double& v : out) v += offset;
  return out;
}

/// Deterministic vanishing-rate limit Ybar + sum_i w_{t,i} gbar_i(q) with
/// w_t the limit weights of Sbar.
inline Vector stochastic_limit_formula(const MeanField& mf, std::span<const double> y, double t) {
  const auto [offset, target] = center(y, Init::Mean);
  const Vector w = limit_weights(mf.design_mean, target, t).w;
  Vector out = matvec(mf.query_mean, w);
  for (double& v : out) v += offset;
  return out;
}

/// K = 2 M1 + M1^2 + (n+1) M2.
struct BoundConstants {
  double m1;
  double m2;
  double k;
};

struct VarianceBoundReport {
  std::vector<BoundConstants> constants;  // per query point
  Vector bound;
  Vector empirical;
  bool all_within = true;
};

/// Variance bound per query point q, with M1 / M2 maximised over the design
/// points and q:
///   K (m+1) lambda^2 (1 + K lambda)^m n ||ytilde||_inf^2 {1 + (lambda m K)^2 exp(2 lambda m ||Sbar||_inf)}
inline VarianceBoundReport variance_bound(const MeanField& mf, std::span<const double> y, double lambda, std::size_t m,
                                          std::span<const double> empirical_variance) {
  const std::size_t n = mf.design_mean.rows();
  const std::size_t q = mf.query_mean.rows();
  if (empirical_variance.size() != q) throw InputError("variance_bound: one empirical variance per query point");
  const Vector ytilde = center(y, Init::Mean).target;
  const double yinf = norm_inf(ytilde);
  const double sbar_inf = norm_inf(mf.design_mean);
  auto row_abs = [](std::span<const double> r) {
    double s = 0.0;
    for (double v : r) s += std::abs(v);
    return s;
  };
  auto row_sum = [](std::span<const double> r) {
    double s = 0.0;
    for (double v : r) s += v;
    return s;
  };
  double m1_design = 0.0, m2_design = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    m1_design = std::max(m1_design, row_abs(mf.design_mean.row(j)));
    m2_design = std::max(m2_design, row_sum(mf.design_var.row(j)));
  }
  VarianceBoundReport rep;
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  for (std::size_t r = 0; r < q; ++r) {
    const double m1 = std::max(m1_design, row_abs(mf.query_mean.row(r)));
    const double m2 = std::max(m2_design, row_sum(mf.query_var.row(r)));
    const double k = 2.0 * m1 + m1 * m1 + (nd + 1.0) * m2;
    const double lmk = lambda * md * k;
    const double b = k * (md + 1.0) * lambda * lambda * std::pow(1.0 + k * lambda, md) * nd * yinf * yinf *
                     (1.0 + lmk * lmk * std::exp(2.0 * lambda * md * sbar_inf));
    rep.constants.push_back({m1, m2, k});
    rep.bound.push_back(b);
    rep.empirical.push_back(empirical_variance[r]);
    if (!(empirical_variance[r] <= b)) rep.all_within = false;
  }
  return rep;
}

}  // namespace boostlab
