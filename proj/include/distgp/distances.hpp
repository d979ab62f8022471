#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "distgp/assignment.hpp"
#include "distgp/distributions.hpp"
#include "distgp/errors.hpp"
#include "distgp/parallel.hpp"
#include "distgp/quadrature.hpp"

namespace distgp {

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Constant subtracted in c_b = log(4 b_max^2) - constant. The value
/// gamma_EM - 1 makes the Dirac closed form agree with the LCD integral it
/// approximates; kEulerGamma alone leaves a 2 * D_E offset.
inline constexpr double kDefaultMcvmdConstant = kEulerGamma - 1.0;

enum class DistanceFamily { mcvmd, wasserstein, lp, total_variation, hellinger, jensen_shannon };

inline std::string_view to_string(DistanceFamily f) {
  switch (f) {
    case DistanceFamily::mcvmd: return "mcvmd";
    case DistanceFamily::wasserstein: return "wasserstein";
    case DistanceFamily::lp: return "lp";
    case DistanceFamily::total_variation: return "total_variation";
    case DistanceFamily::hellinger: return "hellinger";
    case DistanceFamily::jensen_shannon: return "jensen_shannon";
  }
  return "unknown";
}

inline DistanceFamily distance_family_from_string(std::string_view s) {
  for (auto f : {DistanceFamily::mcvmd, DistanceFamily::wasserstein, DistanceFamily::lp,
                 DistanceFamily::total_variation, DistanceFamily::hellinger,
                 DistanceFamily::jensen_shannon}) {
    if (to_string(f) == s) return f;
  }
  throw ParameterError("unknown distance family '" + std::string(s) + "'");
}

/// True for families that compare two Dirac mixtures; the others compare two
/// univariate continuous densities.
inline bool requires_dirac(DistanceFamily f) {
  return f == DistanceFamily::mcvmd || f == DistanceFamily::wasserstein;
}

/// Grid for continuous-density integrals. Unset bounds default to the joint
/// mean span widened by 8 of the larger standard deviation on each side.
struct QuadratureConfig {
  std::optional<double> lower;
  std::optional<double> upper;
  std::size_t nodes = 2001;
};

struct DistanceSpec {
  DistanceFamily family = DistanceFamily::mcvmd;
  double b_max = 100.0;
  double p = 2.0;
  double mcvmd_constant = kDefaultMcvmdConstant;
  QuadratureConfig quadrature{};

  void check() const {
    if (!(b_max > 0.0)) throw ParameterError("b_max must be positive");
    if (!(p >= 1.0)) throw ParameterError("order p must be >= 1");
    if (quadrature.nodes < 3 || quadrature.nodes % 2 == 0) {
      throw ParameterError("quadrature node count must be odd and >= 3");
    }
    if (quadrature.lower && quadrature.upper && !(*quadrature.lower < *quadrature.upper)) {
      throw ParameterError("quadrature bounds must be ordered");
    }
  }
};

struct DistanceMatrix {
  Eigen::MatrixXd values;
  DistanceSpec spec;

  Eigen::Index size() const { return values.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

namespace instrumentation {
inline std::atomic<std::size_t>& distance_matrix_builds() {
  static std::atomic<std::size_t> count{0};
  return count;
}
}  // namespace instrumentation

// ---------------------------------------------------------------------------

inline double xlog(double x) {
  if (x < 0.0) throw DomainError("xlog is undefined for negative arguments");
  return x == 0.0 ? 0.0 : x * std::log(x);
}

namespace detail {

template <typename A, typename B>
int lexicographic_compare(const A& a, const B& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a.data()[i] < b.data()[i]) return -1;
    if (a.data()[i] > b.data()[i]) return 1;
  }
  return 0;
}

// Total order on mixtures. Pairwise distances evaluate their arguments in this
// order, which makes d(a, b) and d(b, a) bitwise identical.
inline bool dirac_less(const DiracMixture& a, const DiracMixture& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  if (a.dimension() != b.dimension()) return a.dimension() < b.dimension();
  if (int c = lexicographic_compare(a.weights(), b.weights())) return c < 0;
  return lexicographic_compare(a.points(), b.points()) < 0;
}

inline bool gaussian_less(const Gaussian& a, const Gaussian& b) {
  if (a.dimension() != b.dimension()) return a.dimension() < b.dimension();
  if (int c = lexicographic_compare(a.mean(), b.mean())) return c < 0;
  return lexicographic_compare(a.covariance(), b.covariance()) < 0;
}

// Weighted double sum of xlog over squared point differences.
inline double xlog_double_sum(const DiracMixture& a, const DiracMixture& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      row += b.weights()[j] * xlog((a.point_at(i) - b.point_at(j)).squaredNorm());
    }
    total += a.weights()[i] * row;
  }
  return total;
}

inline void require_same_dimension(const DiracMixture& f, const DiracMixture& g) {
  if (f.dimension() != g.dimension()) {
    throw DimensionError("mixtures have dimensions " + std::to_string(f.dimension()) +
                         " and " + std::to_string(g.dimension()));
  }
}

struct UnivariateNormal {
  double mean;
  double sd;

  double pdf(double x) const {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  }
};

inline UnivariateNormal as_univariate(const Gaussian& g) {
  if (g.dimension() != 1) {
    throw DimensionError("continuous distances support univariate Gaussians only");
  }
  return {g.mean()[0], std::sqrt(g.covariance()(0, 0))};
}

inline std::pair<double, double> grid_bounds(const UnivariateNormal& f, const UnivariateNormal& g,
                                             const QuadratureConfig& q) {
  const double spread = 8.0 * std::max(f.sd, g.sd);
  const double lo = q.lower.value_or(std::min(f.mean, g.mean) - spread);
  const double hi = q.upper.value_or(std::max(f.mean, g.mean) + spread);
  if (!(lo < hi)) throw ParameterError("quadrature bounds must be ordered");
  return {lo, hi};
}

// Points where the two densities are equal: roots of
// (x - m1)^2 / (2 v1) - (x - m2)^2 / (2 v2) + log(s1 / s2) = 0.
inline std::vector<double> density_crossings(const UnivariateNormal& f, const UnivariateNormal& g) {
  const double v1 = f.sd * f.sd;
  const double v2 = g.sd * g.sd;
  const double a = 0.5 / v1 - 0.5 / v2;
  const double b = g.mean / v2 - f.mean / v1;
  const double c = 0.5 * f.mean * f.mean / v1 - 0.5 * g.mean * g.mean / v2 + std::log(f.sd / g.sd);
  std::vector<double> roots;
  if (std::abs(a) <= 1e-14 * (0.5 / v1 + 0.5 / v2)) {
    if (b != 0.0) roots.push_back(-c / b);
    return roots;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return roots;
  // Cancellation-free pair of roots.
  const double qv = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (qv != 0.0) roots.push_back(c / qv);
  roots.push_back(qv / a);
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Integrates h(f(x), g(x)) over the configured grid. The grid is split at the
// density crossings, where |f - g| has kinks, and each piece gets the full
// node count so the rule keeps its smooth-integrand accuracy.
template <typename H>
double integrate_pair(const Gaussian& a, const Gaussian& b, const QuadratureConfig& q, H&& h) {
  const Gaussian& first = gaussian_less(b, a) ? b : a;
  const Gaussian& second = &first == &a ? b : a;
  const UnivariateNormal f = as_univariate(first);
  const UnivariateNormal g = as_univariate(second);
  const auto [lo, hi] = grid_bounds(f, g, q);
  std::vector<double> cuts{lo};
  for (double x : density_crossings(f, g)) {
    if (x > cuts.back() && x < hi) cuts.push_back(x);
  }
  cuts.push_back(hi);
  auto integrand = [&](double x) { return h(f.pdf(x), g.pdf(x)); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += simpson(integrand, cuts[i], cuts[i + 1], q.nodes);
  }
  return total;
}

}  // namespace detail

/// Modified Cramer-von Mises distance between two Dirac mixtures, closed form
/// for large b_max:
///   d^2 = pi^(n/2) / 8 * (D_f - 2 D_fg + D_g + 2 c_b D_E),
///   c_b = log(4 b_max^2) - constant.
inline double mcvmd_dirac(const DiracMixture& a, const DiracMixture& b, double b_max,
                          double constant = kDefaultMcvmdConstant) {
  detail::require_same_dimension(a, b);
  if (!(b_max > 0.0)) throw ParameterError("b_max must be positive");
  const double c_b = std::log(4.0 * b_max * b_max) - constant;
  if (!(c_b > 0.0)) throw ParameterError("b_max too small: c_b = " + std::to_string(c_b));

  const DiracMixture& f = detail::dirac_less(b, a) ? b : a;
  const DiracMixture& g = &f == &a ? b : a;

  const double d_f = detail::xlog_double_sum(f, f);
  const double d_fg = detail::xlog_double_sum(f, g);
  const double d_g = detail::xlog_double_sum(g, g);
  const Eigen::VectorXd mean_diff =
      f.points().transpose() * f.weights() - g.points().transpose() * g.weights();
  const double d_e = mean_diff.squaredNorm();

  const double n = static_cast<double>(f.dimension());
  const double scale = std::pow(std::numbers::pi, n / 2.0) / 8.0;
  const double d2 = scale * (d_f - 2.0 * d_fg + d_g + 2.0 * c_b * d_e);
  if (d2 >= 0.0) return std::sqrt(d2);
  // Round-off floor, relative to the magnitude of the cancelling terms.
  const double magnitude = std::max(1.0, scale * (std::abs(d_f) + 2.0 * std::abs(d_fg) +
                                                  std::abs(d_g) + 2.0 * c_b * d_e));
  if (d2 >= -1e-10 * magnitude) return 0.0;
  throw InternalError("mCvMD squared distance is negative: " + std::to_string(d2));
}

/// Cost matrix ||x_i - y_j||^p between the points of two mixtures.
inline Eigen::MatrixXd transport_costs(const DiracMixture& f, const DiracMixture& g, double p) {
  Eigen::MatrixXd cost(f.size(), g.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double sq = (f.point_at(i) - g.point_at(j)).squaredNorm();
      if (p == 2.0) {
        cost(i, j) = sq;
      } else if (p == 1.0) {
        cost(i, j) = std::sqrt(sq);
      } else {
        cost(i, j) = std::pow(std::sqrt(sq), p);
      }
    }
  }
  return cost;
}

/// Checks the equal-size, equal-weight precondition of the assignment distance.
inline void require_uniform_pair(const DiracMixture& f, const DiracMixture& g) {
  detail::require_same_dimension(f, g);
  if (f.size() != g.size()) {
    throw CardinalityError("assignment distance needs equal component counts, got " +
                           std::to_string(f.size()) + " and " + std::to_string(g.size()));
  }
  const double w = 1.0 / static_cast<double>(f.size());
  for (const DiracMixture* d : {&f, &g}) {
    for (Eigen::Index i = 0; i < d->size(); ++i) {
      if (std::abs(d->weights()[i] - w) > kWeightSumTolerance) {
        throw WeightError("assignment distance needs equally weighted components");
      }
    }
  }
}

/// ((1/m) * total)^(1/p) with exact shortcuts for p = 1, 2.
inline double normalize_transport_cost(double total, Eigen::Index m, double p) {
  const double mean = total / static_cast<double>(m);
  if (p == 1.0) return mean;
  if (p == 2.0) return std::sqrt(mean);
  return std::pow(mean, 1.0 / p);
}

/// Wasserstein (optimal mass transfer) distance between two equally weighted
/// mixtures of the same size, solved exactly as a linear assignment problem.
inline double wasserstein_dirac(const DiracMixture& a, const DiracMixture& b, double p) {
  if (!(p >= 1.0)) throw ParameterError("order p must be >= 1");
  require_uniform_pair(a, b);
  const DiracMixture& f = detail::dirac_less(b, a) ? b : a;
  const DiracMixture& g = &f == &a ? b : a;
  const Eigen::MatrixXd cost = transport_costs(f, g, p);
  const auto col = solve_assignment(cost);
  return normalize_transport_cost(assignment_cost(cost, col), f.size(), p);
}

/// (integral |f - g|^p dx)^(1/p) over the quadrature grid.
inline double lp_distance(const Gaussian& f, const Gaussian& g, double p,
                          const QuadratureConfig& q = {}) {
  if (!(p >= 1.0)) throw ParameterError("order p must be >= 1");
  const double integral = detail::integrate_pair(f, g, q, [p](double a, double b) {
    const double diff = std::abs(a - b);
    return p == 1.0 ? diff : std::pow(diff, p);
  });
  return p == 1.0 ? integral : std::pow(integral, 1.0 / p);
}

/// (1 - integral sqrt(f g) dx)^2, clamped to [0, 1].
inline double hellinger(const Gaussian& f, const Gaussian& g, const QuadratureConfig& q = {}) {
  const double overlap =
      detail::integrate_pair(f, g, q, [](double a, double b) { return std::sqrt(a * b); });
  const double v = 1.0 - overlap;
  return std::clamp(v * v, 0.0, 1.0);
}

/// Jensen-Shannon divergence with natural logarithm.
inline double jensen_shannon(const Gaussian& f, const Gaussian& g, const QuadratureConfig& q = {}) {
  constexpr double floor = 1e-300;
  const double integral = detail::integrate_pair(f, g, q, [](double a, double b) {
    const double mid = 0.5 * (a + b);
    const double ta = a < floor ? 0.0 : a * std::log(a / mid);
    const double tb = b < floor ? 0.0 : b * std::log(b / mid);
    return ta + tb;
  });
  return std::max(0.0, 0.5 * integral);
}

/// Dispatches on the family. Pairs the family cannot compare raise
/// UnsupportedPairError; no implicit conversion between input classes.
inline double distance(const InputDistribution& a, const InputDistribution& b,
                       const DistanceSpec& spec) {
  spec.check();
  const bool dirac_family = requires_dirac(spec.family);
  for (const InputDistribution* d : {&a, &b}) {
    if (is_dirac(*d) != dirac_family) {
      throw UnsupportedPairError(std::string("distance family '") +
                                 std::string(to_string(spec.family)) +
                                 "' does not support " + class_name(*d) + " inputs (pair " +
                                 class_name(a) + "/" + class_name(b) + ")");
    }
  }
  switch (spec.family) {
    case DistanceFamily::mcvmd:
      return mcvmd_dirac(std::get<DiracMixture>(a), std::get<DiracMixture>(b), spec.b_max,
                         spec.mcvmd_constant);
    case DistanceFamily::wasserstein:
      return wasserstein_dirac(std::get<DiracMixture>(a), std::get<DiracMixture>(b), spec.p);
    case DistanceFamily::lp:
      return lp_distance(std::get<Gaussian>(a), std::get<Gaussian>(b), spec.p, spec.quadrature);
    case DistanceFamily::total_variation:
      return lp_distance(std::get<Gaussian>(a), std::get<Gaussian>(b), 1.0, spec.quadrature);
    case DistanceFamily::hellinger:
      return hellinger(std::get<Gaussian>(a), std::get<Gaussian>(b), spec.quadrature);
    case DistanceFamily::jensen_shannon:
      return jensen_shannon(std::get<Gaussian>(a), std::get<Gaussian>(b), spec.quadrature);
  }
  throw InternalError("unhandled distance family");
}

/// Distances from one input to each element of `inputs`.
inline Eigen::VectorXd distances_to(const InputDistribution& x,
                                    const std::vector<InputDistribution>& inputs,
                                    const DistanceSpec& spec) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      out[static_cast<Eigen::Index>(i)] = distance(x, inputs[i], spec);
    } catch (Error& e) {
      e.add_context("training input " + std::to_string(i));
      throw;
    }
  }
  return out;
}

/// Pairwise distances among `inputs`. The strict upper triangle is computed
/// (possibly in parallel) and mirrored; the diagonal is zero.
inline DistanceMatrix distance_matrix(const std::vector<InputDistribution>& inputs,
                                      const DistanceSpec& spec, std::size_t threads = 0) {
  spec.check();
  instrumentation::distance_matrix_builds().fetch_add(1, std::memory_order_relaxed);
  const auto n = static_cast<Eigen::Index>(inputs.size());
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, n);
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    try {
      values(i, j) = distance(inputs[static_cast<std::size_t>(i)],
                              inputs[static_cast<std::size_t>(j)], spec);
    } catch (Error& e) {
      e.add_context("inputs (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      throw;
    }
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) values(j, i) = values(i, j);
  }
  return {std::move(values), spec};
}

}  // namespace distgp
