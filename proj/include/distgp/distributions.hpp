#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "distgp/errors.hpp"

namespace distgp {

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kMinCholeskyPivot = 1e-12;
inline constexpr double kWeightSumTolerance = 1e-9;

/// Multivariate normal distribution. Construction validates the covariance:
/// it must be symmetric to 1e-12 and its Cholesky factor must have every
/// diagonal entry above 1e-12 (near-singular inputs are rejected, not
/// regularized).
class Gaussian {
 public:
  Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
      : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    check();
  }

  /// Univariate convenience constructor taking a variance.
  static Gaussian univariate(double mean, double variance) {
    return Gaussian(Eigen::VectorXd::Constant(1, mean),
                    Eigen::MatrixXd::Constant(1, 1, variance));
  }

  Eigen::Index dimension() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }

  void check() const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  mutable Eigen::MatrixXd chol_;
};

/// Weighted point set f(x) = sum_i w_i delta(x - x_i). Points are the rows of
/// an m x n matrix. Weights that sum to one within 1e-9 are renormalized.
class DiracMixture {
 public:
  DiracMixture(Eigen::VectorXd weights, Eigen::MatrixXd points)
      : weights_(std::move(weights)), points_(std::move(points)) {
    check();
    weights_ /= weights_.sum();
  }

  /// Equally weighted mixture over the given points.
  static DiracMixture uniform(Eigen::MatrixXd points) {
    const Eigen::Index m = points.rows();
    if (m < 1) throw DimensionError("Dirac mixture needs at least one point");
    return DiracMixture(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)),
                        std::move(points));
  }

  /// Single point mass.
  static DiracMixture point(const Eigen::VectorXd& x) {
    return DiracMixture(Eigen::VectorXd::Ones(1), x.transpose());
  }

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dimension() const { return points_.cols(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& points() const { return points_; }
  auto point_at(Eigen::Index i) const { return points_.row(i); }

  void check() const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd points_;
};

using InputDistribution = std::variant<Gaussian, DiracMixture>;

inline Eigen::Index dimension(const InputDistribution& d) {
  return std::visit([](const auto& v) { return v.dimension(); }, d);
}

inline bool is_gaussian(const InputDistribution& d) {
  return std::holds_alternative<Gaussian>(d);
}

inline bool is_dirac(const InputDistribution& d) {
  return std::holds_alternative<DiracMixture>(d);
}

inline const char* class_name(const InputDistribution& d) {
  return is_gaussian(d) ? "gaussian" : "dirac";
}

inline void Gaussian::check() const {
  const Eigen::Index n = mean_.size();
  if (n < 1) throw DimensionError("Gaussian mean must be non-empty");
  if (covariance_.rows() != n || covariance_.cols() != n) {
    throw DimensionError("Gaussian covariance must be " + std::to_string(n) +
                         "x" + std::to_string(n));
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) {
    throw CovarianceError("Gaussian parameters must be finite");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(covariance_(i, j) - covariance_(j, i)) > kSymmetryTolerance) {
        throw CovarianceError("covariance is not symmetric");
      }
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw CovarianceError("covariance is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  if (l.diagonal().minCoeff() <= kMinCholeskyPivot) {
    throw CovarianceError("covariance is numerically singular");
  }
  chol_ = std::move(l);
}

inline void DiracMixture::check() const {
  const Eigen::Index m = points_.rows();
  if (m < 1) throw DimensionError("Dirac mixture needs at least one point");
  if (points_.cols() < 1) throw DimensionError("Dirac points must be non-empty");
  if (weights_.size() != m) {
    throw DimensionError("Dirac mixture has " + std::to_string(weights_.size()) +
                         " weights for " + std::to_string(m) + " points");
  }
  if (!points_.allFinite()) throw DomainError("Dirac points must be finite");
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = weights_[i];
    if (!(w > 0.0 && w <= 1.0)) {
      throw WeightError("Dirac weight " + std::to_string(i) + " = " +
                        std::to_string(w) + " outside (0, 1]");
    }
  }
  const double sum = weights_.sum();
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw WeightError("Dirac weights sum to " + std::to_string(sum));
  }
}

/// Re-checks every invariant of the active alternative.
inline void validate(const InputDistribution& dist) {
  std::visit([](const auto& v) { v.check(); }, dist);
}

// ---------------------------------------------------------------------------
// Sampling

inline double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Inverse of the standard normal CDF by bisection to absolute 1e-12.
inline double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal quantile needs p in (0, 1)");
  }
  double lo = -40.0;
  double hi = 40.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (standard_normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Equal-mass quantile placement: x_i = mu + sigma * Phi^{-1}((i - 0.5) / m).
inline DiracMixture deterministic_sample(const Gaussian& g, Eigen::Index m) {
  if (g.dimension() != 1) {
    throw DimensionError("deterministic sampling supports univariate Gaussians only");
  }
  if (m < 1) throw ParameterError("sample count must be positive");
  const double mu = g.mean()[0];
  const double sigma = std::sqrt(g.covariance()(0, 0));
  Eigen::MatrixXd points(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    points(i, 0) = mu + sigma * standard_normal_quantile(p);
  }
  // The median of an odd-sized sample is exact.
  if (m % 2 == 1) points(m / 2, 0) = mu;
  return DiracMixture::uniform(std::move(points));
}

/// m equally weighted draws from g, reproducible for a fixed seed.
inline DiracMixture random_sample(const Gaussian& g, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw ParameterError("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = g.dimension();
  Eigen::MatrixXd points(m, n);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) z[k] = normal(rng);
    points.row(i) = (g.mean() + g.cholesky() * z).transpose();
  }
  return DiracMixture::uniform(std::move(points));
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

inline Moments moments(const InputDistribution& dist) {
  if (const auto* g = std::get_if<Gaussian>(&dist)) {
    return {g->mean(), g->covariance()};
  }
  const auto& d = std::get<DiracMixture>(dist);
  Eigen::VectorXd mean = d.points().transpose() * d.weights();
  Eigen::MatrixXd centered = d.points().rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * d.weights().asDiagonal() * centered;
  return {std::move(mean), std::move(cov)};
}

}  // namespace distgp
