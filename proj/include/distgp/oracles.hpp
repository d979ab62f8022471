#pragma once

// Slow reference evaluations used to validate the closed forms and solvers.
// Each one works from the defining integral or enumeration and shares no
// numerical path with the implementation it checks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <variant>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/distributions.hpp"
#include "distgp/errors.hpp"
#include "distgp/quadrature.hpp"

namespace distgp {

struct LcdQuadrature {
  std::size_t location_nodes = 2001;
  std::size_t width_nodes = 2001;
  // Location grid for kernel width b spans the points widened by this many b.
  double location_margin = 8.0;
};

/// Localized cumulative distribution of a 1-D mixture,
/// F(m, b) = sum_i w_i exp(-(x_i - m)^2 / (2 b^2)).
inline double localized_cumulative(const DiracMixture& f, double m, double b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double z = (f.points()(i, 0) - m) / b;
    total += f.weights()[i] * std::exp(-0.5 * z * z);
  }
  return total;
}

/// mCvMD from its definition: sqrt of the integral over b in [0, b_max] and
/// m in R of w(b) (F(m, b) - G(m, b))^2, with w(b) = 1 in one dimension. Both
/// integrals use composite Simpson; the location grid adapts to each b.
inline double mcvmd_lcd_oracle(const DiracMixture& f, const DiracMixture& g, double b_max,
                               const LcdQuadrature& q = {}) {
  if (f.dimension() != 1 || g.dimension() != 1) {
    throw DimensionError("LCD oracle supports one-dimensional mixtures only");
  }
  if (q.location_nodes < 51 || q.width_nodes < 51) {
    throw QuadratureError("LCD oracle needs at least 51 nodes per axis");
  }
  if (q.location_nodes % 2 == 0 || q.width_nodes % 2 == 0) {
    throw QuadratureError("LCD oracle needs odd node counts");
  }
  if (!(b_max > 0.0)) throw ParameterError("b_max must be positive");

  const double lo = std::min(f.points().minCoeff(), g.points().minCoeff());
  const double hi = std::max(f.points().maxCoeff(), g.points().maxCoeff());

  auto squared_lcd_difference = [&](double b) {
    if (b == 0.0) return 0.0;
    const double margin = q.location_margin * b;
    return simpson(
        [&](double m) {
          const double diff = localized_cumulative(f, m, b) - localized_cumulative(g, m, b);
          return diff * diff;
        },
        lo - margin, hi + margin, q.location_nodes);
  };
  const double d2 = simpson(squared_lcd_difference, 0.0, b_max, q.width_nodes);
  return std::sqrt(std::max(0.0, d2));
}

/// Assignment distance by enumerating every permutation (m <= 8).
inline double assignment_bruteforce_oracle(const DiracMixture& a, const DiracMixture& b,
                                           double p) {
  require_uniform_pair(a, b);
  if (a.size() > 8) throw SizeError("brute-force assignment supports m <= 8");
  const DiracMixture& f = detail::dirac_less(b, a) ? b : a;
  const DiracMixture& g = &f == &a ? b : a;
  const Eigen::MatrixXd cost = transport_costs(f, g, p);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(f.size()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return normalize_transport_cost(best, f.size(), p);
}

namespace detail {

inline Eigen::VectorXd draw(const InputDistribution& d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  if (const auto* g = std::get_if<Gaussian>(&d)) {
    Eigen::VectorXd z(g->dimension());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
    return g->mean() + g->cholesky() * z;
  }
  const auto& m = std::get<DiracMixture>(d);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    acc += m.weights()[i];
    if (u < acc) return m.point_at(i).transpose();
  }
  return m.point_at(m.size() - 1).transpose();
}

}  // namespace detail

/// Monte-Carlo estimate of the expected SE kernel
/// E[alpha^2 exp(-|x - y|^2 / (2 l^2))], x ~ pi, y ~ pj, from `samples`
/// independent pairs.
inline double mean_kernel_mc_oracle(const InputDistribution& pi, const InputDistribution& pj,
                                    double alpha, double lengthscale, std::size_t samples,
                                    std::uint64_t seed) {
  if (samples < 1) throw ParameterError("sample count must be positive");
  if (dimension(pi) != dimension(pj)) throw DimensionError("input dimensions differ");
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    const Eigen::VectorXd x = detail::draw(pi, rng);
    const Eigen::VectorXd y = detail::draw(pj, rng);
    total += std::exp(-0.5 * (x - y).squaredNorm() / (lengthscale * lengthscale));
  }
  return alpha * alpha * total / static_cast<double>(samples);
}

}  // namespace distgp
