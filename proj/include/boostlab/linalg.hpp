#pragma once

// Dense kernels for linear L2-boosting: symmetric eigendecomposition, the
// action of exp(-tS), and the weight formulas at finite and vanishing
// learning rate.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <variant>

#include "boostlab/dense.hpp"
#include "boostlab/error.hpp"

namespace boostlab {

/// Eigenvalues sorted descending; column i of `vectors` is the unit
/// eigenvector for values[i].
struct Eigensystem {
  Vector values;
  Matrix vectors;

  std::size_t size() const noexcept { return values.size(); }
  Vector vector(std::size_t i) const { return vectors.column(i); }

  /// Coordinates U^T v.
  Vector project(std::span<const double> v) const { return matvec_transposed(vectors, v); }
  /// U c.
  Vector expand(std::span<const double> coords) const { return matvec(vectors, coords); }

  /// max |U^T U - I|
  double orthonormality_defect() const {
    const std::size_t n = size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += vectors(k, i) * vectors(k, j);
        d = std::max(d, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    return d;
  }

  /// max_i ||S u_i - mu_i u_i||_2
  double residual(const Matrix& s) const {
    double r = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const Vector u = vector(i);
      Vector su = matvec(s, u);
      for (std::size_t k = 0; k < su.size(); ++k) su[k] -= values[i] * u[k];
      r = std::max(r, norm2(su));
    }
    return r;
  }
};

namespace detail {

inline void check_square_finite(const Matrix& s, const char* who) {
  if (!s.square()) throw InputError(std::string(who) + ": matrix must be square");
  if (!s.all_finite()) throw InputError(std::string(who) + ": matrix has non-finite entries");
}

inline void check_time(double t, const char* who) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw InputError(std::string(who) + ": time must be finite and >= 0, got " + std::to_string(t));
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
/// symmetrized as (S + S^T)/2 first. With `psd_by_construction`, eigenvalues
/// in (-1e-12, 0) are clamped to 0.
inline Eigensystem eig_sym(const Matrix& s, bool psd_by_construction = false) {
  detail::check_square_finite(s, "eig_sym");
  const std::size_t n = s.rows();
  constexpr int kMaxSweeps = 100;

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  Matrix v = Matrix::identity(n);
  Vector d(n), b(n), z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) b[i] = d[i] = a(i, i);

  auto rotate = [](Matrix& m, std::size_t i, std::size_t j, std::size_t k, std::size_t l, double sn,
                   double tau) {
    const double g = m(i, j);
    const double h = m(k, l);
    m(i, j) = g - sn * (h + g * tau);
    m(k, l) = h + sn * (g - h * tau);
  };

  bool converged = n < 2;
  int sweep = 0;
  for (; sweep < kMaxSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    if (off == 0.0) {
      converged = true;
      break;
    }
    const double thresh = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double g = 100.0 * std::abs(a(p, q));
        if (sweep > 3 && std::abs(d[p]) + g == std::abs(d[p]) && std::abs(d[q]) + g == std::abs(d[q])) {
          a(p, q) = 0.0;
          continue;
        }
        if (std::abs(a(p, q)) <= thresh) continue;
        double h = d[q] - d[p];
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = a(p, q) / h;
        } else {
          const double theta = 0.5 * h / a(p, q);
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        const double tau = sn / (1.0 + c);
        h = t * a(p, q);
        z[p] -= h;
        z[q] += h;
        d[p] -= h;
        d[q] += h;
        a(p, q) = 0.0;
        for (std::size_t j = 0; j < p; ++j) rotate(a, j, p, j, q, sn, tau);
        for (std::size_t j = p + 1; j < q; ++j) rotate(a, p, j, j, q, sn, tau);
        for (std::size_t j = q + 1; j < n; ++j) rotate(a, p, j, q, j, sn, tau);
        for (std::size_t j = 0; j < n; ++j) rotate(v, j, p, j, q, sn, tau);
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      b[p] += z[p];
      d[p] = b[p];
      z[p] = 0.0;
    }
  }
  if (!converged)
    throw NumericError("eig_sym: Jacobi iteration did not converge after " + std::to_string(sweep) +
                       " sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] > d[j]; });

  Eigensystem es{Vector(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    double mu = d[src];
    if (psd_by_construction && mu < 0.0 && mu > -1e-12) mu = 0.0;
    es.values[c] = mu;
    // sign convention: largest-magnitude component positive
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(arg, src)) + 1e-14) arg = k;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) es.vectors(k, c) = sign * v(k, src);
  }
  return es;
}

/// Rotates the eigenspace containing `direction` so that its first basis
/// vector is direction/|direction|. Requires `direction` to lie (within `tol`)
/// in the span of eigenvectors whose eigenvalues agree within `tol`.
inline void align_eigenspace(Eigensystem& es, std::span<const double> direction, double tol = 1e-8) {
  const std::size_t n = es.size();
  Vector e(direction.begin(), direction.end());
  const double len = norm2(e);
  if (len == 0.0) throw InputError("align_eigenspace: zero direction");
  for (double& v : e) v /= len;
  const Vector coords = es.project(e);
  std::vector<std::size_t> cluster;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(coords[i]) > tol) cluster.push_back(i);
  if (cluster.empty()) throw NumericError("align_eigenspace: direction orthogonal to all eigenvectors");
  const double mu0 = es.values[cluster.front()];
  for (std::size_t i : cluster)
    if (std::abs(es.values[i] - mu0) > tol)
      throw InputError("align_eigenspace: direction is not an eigenvector");
  // widen to the whole eigenvalue cluster
  cluster.clear();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(es.values[i] - mu0) <= tol) cluster.push_back(i);

  // Gram-Schmidt: e first, then the old cluster vectors, dropping the one most
  // parallel to e.
  std::size_t drop = cluster.front();
  for (std::size_t i : cluster)
    if (std::abs(coords[i]) > std::abs(coords[drop])) drop = i;
  std::vector<Vector> basis{e};
  for (std::size_t i : cluster) {
    if (i == drop) continue;
    Vector u = es.vector(i);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : basis) {
        const double c = dot(u, q);
        for (std::size_t k = 0; k < n; ++k) u[k] -= c * q[k];
      }
    const double un = norm2(u);
    for (double& v : u) v /= un;
    basis.push_back(std::move(u));
  }
  for (std::size_t c = 0; c < cluster.size(); ++c)
    for (std::size_t k = 0; k < n; ++k) es.vectors(k, cluster[c]) = basis[c][k];
}

/// (1 - exp(-mu t)) / mu, continuously extended by t at mu = 0.
inline double phi(double mu, double t) noexcept {
  const double x = mu * t;
  if (std::abs(x) < 1e-8) return t * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0);
  return -std::expm1(-x) / mu;
}

/// exp(-mu t), flushed to 0 below 1e-300.
inline double decay(double mu, double t) noexcept {
  const double e = std::exp(-mu * t);
  return e < 1e-300 ? 0.0 : e;
}

/// (1 - lambda mu)^m, the finite-rate counterpart of decay().
inline double discrete_decay(double mu, double lambda, std::size_t m) noexcept {
  const double base = 1.0 - lambda * mu;
  if (base > 0.0) {
    const double e = std::exp(static_cast<double>(m) * std::log1p(-lambda * mu));
    return e < 1e-300 ? 0.0 : e;
  }
  return std::pow(base, static_cast<double>(m));
}

/// (1 - (1 - lambda mu)^m) / mu, extended by lambda m at mu = 0.
inline double discrete_phi(double mu, double lambda, std::size_t m) noexcept {
  const double md = static_cast<double>(m);
  const double x = lambda * mu;
  if (std::abs(x) * md < 1e-8) return lambda * md * (1.0 - (md - 1.0) * x / 2.0);
  if (1.0 - x > 0.0) return -std::expm1(md * std::log1p(-x)) / mu;
  return (1.0 - std::pow(1.0 - x, md)) / mu;
}

/// exp(A) by scaling and squaring with a degree-18 Taylor core.
inline Matrix expm(const Matrix& a) {
  detail::check_square_finite(a, "expm");
  const std::size_t n = a.rows();
  const double nrm = norm_inf(a);
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const double scale = std::ldexp(1.0, -squarings);
  Matrix as(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) as(i, j) = a(i, j) * scale;

  constexpr int kDegree = 18;
  // Horner: I + A(I + A/2(I + A/3(...)))
  Matrix e = Matrix::identity(n);
  for (int k = kDegree; k >= 1; --k) {
    Matrix ae = matmul(as, e);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e(i, j) = (i == j ? 1.0 : 0.0) + ae(i, j) / k;
  }
  for (int s = 0; s < squarings; ++s) e = matmul(e, e);
  return e;
}

/// exp(-tS) v via the spectral form sum_i exp(-t mu_i) (u_i^T v) u_i.
inline Vector expm_action(const Eigensystem& es, double t, std::span<const double> v) {
  detail::check_time(t, "expm_action");
  if (v.size() != es.size()) throw InputError("expm_action: dimension mismatch");
  if (t == 0.0) return Vector(v.begin(), v.end());
  Vector c = es.project(v);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= decay(es.values[i], t);
  return es.expand(c);
}

/// exp(-tS) v for a general square S (scaling and squaring on the full matrix).
inline Vector expm_action(const Matrix& s, double t, std::span<const double> v) {
  detail::check_square_finite(s, "expm_action");
  detail::check_time(t, "expm_action");
  if (v.size() != s.rows()) throw InputError("expm_action: dimension mismatch");
  if (t == 0.0) return Vector(v.begin(), v.end());
  Matrix m(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) m(i, j) = -t * s(i, j);
  return matvec(expm(m), v);
}

struct LimitRegime {
  double t;
};
struct DiscreteRegime {
  double lambda;
  std::size_t m;
};

/// Boosting weights together with the regime that produced them.
struct WeightVector {
  Vector w;
  std::variant<LimitRegime, DiscreteRegime> regime;
};

/// Vanishing-learning-rate weights, symmetric path:
/// w_t = sum_j phi(mu_j, t) (u_j^T ytilde) u_j.
inline WeightVector limit_weights(const Eigensystem& es, std::span<const double> ytilde, double t) {
  detail::check_time(t, "limit_weights");
  if (ytilde.size() != es.size()) throw InputError("limit_weights: dimension mismatch");
  Vector c = es.project(ytilde);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= phi(es.values[i], t);
  return {es.expand(c), LimitRegime{t}};
}

/// Vanishing-learning-rate weights for a general S:
/// w_t = -sum_{j>=1} (-t)^j / j! S^{j-1} ytilde.
///
/// The series is summed until a term falls below 1e-15 of the partial sum.
/// When t ||S||_inf > 30 the alternating series loses too many digits, and
/// w_t is read off exp(tA) with A = [[-S, ytilde], [0, 0]] instead.
inline WeightVector limit_weights(const Matrix& s, std::span<const double> ytilde, double t) {
  detail::check_square_finite(s, "limit_weights");
  detail::check_time(t, "limit_weights");
  const std::size_t n = s.rows();
  if (ytilde.size() != n) throw InputError("limit_weights: dimension mismatch");
  const double snorm = norm_inf(s);

  if (t * snorm > 30.0) {
    Matrix aug(n + 1, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) aug(i, j) = -t * s(i, j);
      aug(i, n) = t * ytilde[i];
    }
    const Matrix e = expm(aug);
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = e(i, n);
    return {std::move(w), LimitRegime{t}};
  }

  Vector w(n, 0.0);
  if (t == 0.0) return {std::move(w), LimitRegime{t}};
  const auto cap = static_cast<std::size_t>(10.0 * (1.0 + t * snorm)) + 50;
  // term_j = t^j (-S)^{j-1} ytilde / j!, so w = sum_j term_j
  Vector term(ytilde.begin(), ytilde.end());
  for (double& v : term) v *= t;
  for (std::size_t j = 1;; ++j) {
    for (std::size_t i = 0; i < n; ++i) w[i] += term[i];
    const double tn = norm2(term);
    if (tn <= 1e-15 * norm2(w) || tn == 0.0) break;
    if (j >= cap)
      throw NumericError("limit_weights: series did not converge within " + std::to_string(cap) +
                         " terms");
    Vector next = matvec(s, term);
    const double f = -t / static_cast<double>(j + 1);
    for (std::size_t i = 0; i < n; ++i) term[i] = f * next[i];
  }
  return {std::move(w), LimitRegime{t}};
}

/// Finite-rate weights by the recursion w_{k+1} = (I - lambda S) w_k + lambda ytilde.
inline WeightVector discrete_weights(const Matrix& s, std::span<const double> ytilde, double lambda,
                                     long long m) {
  detail::check_square_finite(s, "discrete_weights");
  if (m < 0) throw InputError("discrete_weights: iteration count must be >= 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InputError("discrete_weights: learning rate must lie in (0, 1]");
  const std::size_t n = s.rows();
  if (ytilde.size() != n) throw InputError("discrete_weights: dimension mismatch");
  Vector w(n, 0.0);
  for (long long k = 0; k < m; ++k) {
    const Vector sw = matvec(s, w);
    for (std::size_t i = 0; i < n; ++i) w[i] = w[i] - lambda * sw[i] + lambda * ytilde[i];
  }
  return {std::move(w), DiscreteRegime{lambda, static_cast<std::size_t>(m)}};
}

/// Geometric-sum form lambda sum_{j<m} (I - lambda S)^j ytilde.
inline WeightVector discrete_weights_geometric(const Matrix& s, std::span<const double> ytilde,
                                               double lambda, std::size_t m) {
  detail::check_square_finite(s, "discrete_weights_geometric");
  const std::size_t n = s.rows();
  Vector power(ytilde.begin(), ytilde.end());
  Vector acc(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += power[i];
    const Vector sp = matvec(s, power);
    for (std::size_t i = 0; i < n; ++i) power[i] -= lambda * sp[i];
  }
  for (double& v : acc) v *= lambda;
  return {std::move(acc), DiscreteRegime{lambda, m}};
}

/// Binomial form -sum_{j=1}^m C(m,j) (-lambda)^j S^{j-1} ytilde.
/// Only well conditioned for moderate m (the terms grow like (1 + lambda||S||)^m).
inline WeightVector discrete_weights_binomial(const Matrix& s, std::span<const double> ytilde,
                                              double lambda, std::size_t m) {
  detail::check_square_finite(s, "discrete_weights_binomial");
  const std::size_t n = s.rows();
  Vector w(n, 0.0);
  Vector power(ytilde.begin(), ytilde.end());  // S^{j-1} ytilde
  double coef = 1.0;                            // C(m, j) lambda^j
  for (std::size_t j = 1; j <= m; ++j) {
    coef *= static_cast<double>(m - j + 1) / static_cast<double>(j) * lambda;
    const double sgn = (j % 2 == 1) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) w[i] += sgn * coef * power[i];
    if (j < m) power = matvec(s, power);
  }
  return {std::move(w), DiscreteRegime{lambda, m}};
}

enum class Stability { Stable, Unstable, Indeterminate };

inline const char* to_string(Stability s) noexcept {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Indeterminate: return "indeterminate";
  }
  return "?";
}

/// Boosting stability from the spectrum of S. For general S an eigenvalue on
/// the imaginary axis (|Re| <= 1e-10) yields Indeterminate: whether its Jordan
/// block has size 1 is not decidable in floating point.
inline Stability stability_check(const Matrix& s, bool symmetric) {
  detail::check_square_finite(s, "stability_check");
  if (symmetric) {
    const Eigensystem es = eig_sym(s);
    return es.values.empty() || es.values.back() >= -1e-10 ? Stability::Stable : Stability::Unstable;
  }
  const auto n = static_cast<Eigen::Index>(s.rows());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = s(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericError("stability_check: eigenvalue iteration failed");
  bool touches_zero = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = solver.eigenvalues()[i].real();
    if (re < -1e-10) return Stability::Unstable;
    if (re <= 1e-10) touches_zero = true;
  }
  return touches_zero ? Stability::Indeterminate : Stability::Stable;
}

}  // namespace boostlab
