#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/distributions.hpp"
#include "distgp/errors.hpp"
#include "distgp/kernels.hpp"
#include "distgp/nelder_mead.hpp"
#include "distgp/parallel.hpp"

namespace distgp {

// Jitter schedule, as fractions of the mean Gram diagonal.
inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterCeiling = 1e-2;

/// Cholesky factor and solved weights of a (regularized) Gram system.
struct GramFit {
  Eigen::MatrixXd chol;     // lower triangular
  Eigen::VectorXd weights;  // (K + jitter I)^-1 y
  double jitter = 0.0;
};

struct PredictionResult {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

// Cholesky that also fails when a pivot falls to round-off level relative to
// the mean diagonal, so exactly singular systems are not accepted by luck.
inline std::optional<Eigen::MatrixXd> strict_cholesky(const Eigen::MatrixXd& a,
                                                      double pivot_floor) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXd l = llt.matrixL();
  const double min_pivot = l.diagonal().array().square().minCoeff();
  if (!(min_pivot > pivot_floor)) return std::nullopt;
  return l;
}

}  // namespace detail

/// Factorizes K, adding jitter 1e-10 * mean(diag K), growing tenfold up to
/// 1e-2 * mean(diag K) while the factorization fails, then solves for the
/// weights with one step of iterative refinement.
inline GramFit factor_and_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n || y.size() != n) throw DimensionError("Gram system size mismatch");
  if (n == 0) throw DimensionError("Gram system is empty");
  if (!k.allFinite()) throw NotPositiveDefiniteError("Gram matrix has non-finite entries");

  const double mean_diag = k.diagonal().mean();
  if (!(mean_diag > 0.0)) throw NotPositiveDefiniteError("Gram matrix has non-positive diagonal");
  const double pivot_floor =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * mean_diag;

  GramFit fit;
  std::optional<Eigen::MatrixXd> chol = detail::strict_cholesky(k, pivot_floor);
  if (!chol) {
    Eigen::MatrixXd regularized = k;
    for (double jitter = kJitterStart * mean_diag; jitter <= kJitterCeiling * mean_diag * 1.000001;
         jitter *= 10.0) {
      regularized.diagonal() = k.diagonal().array() + jitter;
      chol = detail::strict_cholesky(regularized, pivot_floor);
      if (chol) {
        fit.jitter = jitter;
        break;
      }
    }
    if (!chol) {
      throw NotPositiveDefiniteError(
          "Gram matrix is not positive definite even with jitter " +
          std::to_string(kJitterCeiling) + " * mean diagonal");
    }
  }
  fit.chol = std::move(*chol);

  auto solve = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd z = fit.chol.triangularView<Eigen::Lower>().solve(rhs);
    return Eigen::VectorXd(fit.chol.transpose().triangularView<Eigen::Upper>().solve(z));
  };
  fit.weights = solve(y);
  Eigen::MatrixXd regularized = k;
  regularized.diagonal().array() += fit.jitter;
  const Eigen::VectorXd residual = y - regularized * fit.weights;
  fit.weights += solve(residual);
  return fit;
}

/// -1/2 y^T K^-1 y - 1/2 log det K - N/2 log 2 pi from a factorization.
inline double log_marginal_from_fit(const GramFit& fit, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  const double log_det = 2.0 * fit.chol.diagonal().array().log().sum();
  return -0.5 * y.dot(fit.weights) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// Predictive moments from cross covariances k* and prior variance k**.
/// Variance round-off down to -1e-10 * max(1, k**) is clamped to zero.
inline PredictionResult predict_from_cross(const GramFit& fit, const Eigen::VectorXd& k_star,
                                           double k_self) {
  if (k_star.size() != fit.weights.size()) {
    throw DimensionError("expected " + std::to_string(fit.weights.size()) +
                         " cross covariances, got " + std::to_string(k_star.size()));
  }
  PredictionResult out;
  out.mean = k_star.dot(fit.weights);
  const Eigen::VectorXd v = fit.chol.triangularView<Eigen::Lower>().solve(k_star);
  double var = k_self - v.squaredNorm();
  if (var < 0.0) {
    if (var < -1e-10 * std::max(1.0, std::abs(k_self))) {
      throw NegativeVarianceError("predictive variance " + std::to_string(var) +
                                  " below round-off floor");
    }
    var = 0.0;
  }
  out.variance = var;
  return out;
}

// ---------------------------------------------------------------------------

/// Immutable fitted GP over distribution inputs.
struct TrainedGP {
  KernelSpec kernel;
  double noise_var = 0.0;
  double jitter_used = 0.0;
  double target_offset = 0.0;
  Eigen::MatrixXd chol;
  Eigen::VectorXd weights;
  std::vector<InputDistribution> train_inputs;
  Eigen::VectorXd train_targets;
  DistanceSpec distance_spec;
  std::vector<Eigen::VectorXd> train_means;  // non-stationary family only

  GramFit gram_fit() const { return {chol, weights, jitter_used}; }
};

namespace detail {

inline std::vector<Eigen::VectorXd> input_means(const std::vector<InputDistribution>& inputs) {
  std::vector<Eigen::VectorXd> means;
  means.reserve(inputs.size());
  for (const auto& d : inputs) means.push_back(moments(d).mean);
  return means;
}

inline void check_training_sizes(const std::vector<InputDistribution>& inputs,
                                 const Eigen::VectorXd& targets, const DistanceMatrix& dm) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  if (n < 1) throw DimensionError("training set is empty");
  if (targets.size() != n || dm.size() != n || dm.values.cols() != n) {
    throw DimensionError("training sizes disagree: " + std::to_string(n) + " inputs, " +
                         std::to_string(targets.size()) + " targets, " +
                         std::to_string(dm.size()) + "x" + std::to_string(dm.values.cols()) +
                         " distances");
  }
}

inline Eigen::MatrixXd training_gram(const std::vector<InputDistribution>& inputs,
                                     const DistanceMatrix& dm, const KernelSpec& kernel,
                                     double noise_var) {
  if (kernel.stationary()) return gram_matrix(dm, kernel, noise_var);
  const auto means = input_means(inputs);
  return gram_matrix(dm, kernel, noise_var, &means);
}

}  // namespace detail

inline TrainedGP fit(const std::vector<InputDistribution>& inputs, const Eigen::VectorXd& targets,
                     const DistanceMatrix& dm, const KernelSpec& kernel, double noise_var,
                     double target_offset = 0.0) {
  detail::check_training_sizes(inputs, targets, dm);
  const Eigen::MatrixXd k = detail::training_gram(inputs, dm, kernel, noise_var);
  const Eigen::VectorXd y = targets.array() - target_offset;
  GramFit g = factor_and_solve(k, y);

  TrainedGP gp;
  gp.kernel = kernel;
  gp.noise_var = noise_var;
  gp.jitter_used = g.jitter;
  gp.target_offset = target_offset;
  gp.chol = std::move(g.chol);
  gp.weights = std::move(g.weights);
  gp.train_inputs = inputs;
  gp.train_targets = targets;
  gp.distance_spec = dm.spec;
  if (!kernel.stationary()) gp.train_means = detail::input_means(inputs);
  return gp;
}

/// Prediction from distances to the training inputs. Non-stationary models
/// also need the test input's mean.
inline PredictionResult predict(const TrainedGP& gp, const Eigen::VectorXd& test_dist,
                                double self_dist = 0.0,
                                const Eigen::VectorXd* test_mean = nullptr) {
  const Eigen::Index n = gp.weights.size();
  if (test_dist.size() != n) {
    throw DimensionError("expected " + std::to_string(n) + " distances, got " +
                         std::to_string(test_dist.size()));
  }
  Eigen::VectorXd k_star(n);
  double k_self = 0.0;
  if (gp.kernel.stationary()) {
    for (Eigen::Index i = 0; i < n; ++i) k_star[i] = kernel_eval(gp.kernel, test_dist[i]);
    k_self = kernel_eval(gp.kernel, self_dist);
  } else {
    if (test_mean == nullptr) throw DimensionError("non-stationary prediction needs a test mean");
    for (Eigen::Index i = 0; i < n; ++i) {
      k_star[i] = nonstationary_eval(gp.kernel, *test_mean,
                                     gp.train_means[static_cast<std::size_t>(i)], test_dist[i]);
    }
    k_self = nonstationary_eval(gp.kernel, *test_mean, *test_mean, self_dist);
  }
  PredictionResult r = predict_from_cross(gp.gram_fit(), k_star, k_self);
  r.mean += gp.target_offset;
  return r;
}

inline PredictionResult predict_dist(const TrainedGP& gp, const InputDistribution& test_input) {
  const Eigen::VectorXd d = distances_to(test_input, gp.train_inputs, gp.distance_spec);
  if (gp.kernel.stationary()) return predict(gp, d, 0.0);
  const Eigen::VectorXd mean = moments(test_input).mean;
  return predict(gp, d, 0.0, &mean);
}

/// Monte-Carlo prediction for a Gaussian test input: each draw becomes a
/// single-point Dirac, and the resulting Gaussian mixture is moment matched.
inline PredictionResult predict_mc(const TrainedGP& gp, const Gaussian& test, std::size_t samples,
                                   std::uint64_t seed) {
  if (samples < 1) throw ParameterError("sample count must be positive");
  const DiracMixture draws = random_sample(test, static_cast<Eigen::Index>(samples), seed);
  std::vector<PredictionResult> parts;
  parts.reserve(samples);
  for (Eigen::Index t = 0; t < draws.size(); ++t) {
    parts.push_back(predict_dist(gp, DiracMixture::point(draws.point_at(t).transpose())));
  }
  const double count = static_cast<double>(samples);
  double mean = 0.0;
  double within = 0.0;
  for (const auto& p : parts) {
    mean += p.mean;
    within += p.variance;
  }
  mean /= count;
  within /= count;
  double spread = 0.0;
  for (const auto& p : parts) spread += (p.mean - mean) * (p.mean - mean);
  spread /= count;
  return {mean, within + spread};
}

inline double log_marginal_likelihood(const std::vector<InputDistribution>& inputs,
                                      const Eigen::VectorXd& targets, const DistanceMatrix& dm,
                                      const KernelSpec& kernel, double noise_var,
                                      double target_offset = 0.0) {
  detail::check_training_sizes(inputs, targets, dm);
  const Eigen::MatrixXd k = detail::training_gram(inputs, dm, kernel, noise_var);
  const Eigen::VectorXd y = targets.array() - target_offset;
  return log_marginal_from_fit(factor_and_solve(k, y), y);
}

// ---------------------------------------------------------------------------
// Maximum-likelihood hyperparameters

struct LogUniformRange {
  double lower;
  double upper;
};

struct OptimizerConfig {
  std::size_t restarts = 8;
  std::size_t max_iters = 400;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  LogUniformRange signal_std{1.0, 30.0};
  LogUniformRange lengthscale{0.1, 10.0};
  LogUniformRange noise_std{1e-3, 1e-1};
  LogUniformRange rq_alpha{0.5, 5.0};
  std::optional<double> fixed_noise_var;  // skip noise optimization when set
  double target_offset = 0.0;
  // Shape parameters held fixed during optimization.
  double matern_nu = 1.5;
  double gamma = 1.0;
};

struct OptimizationResult {
  KernelSpec kernel;
  double noise_var = 0.0;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::size_t restarts_succeeded = 0;
  std::size_t best_restart = 0;
};

namespace detail {

// Search box for every log-parameter; points outside are infeasible.
inline constexpr double kLogParamMin = -9.210340371976182;  // log 1e-4
inline constexpr double kLogParamMax = 9.210340371976182;   // log 1e4
inline constexpr double kLogNoiseStdMin = -13.815510557964274;  // log 1e-6

/// Maps unconstrained log-parameters to a kernel and noise variance:
/// [log alpha, log l, (log sigma_noise), (log rq_alpha)]. The constant family
/// reads log alpha as log sigma_0; the non-stationary family as sigma_d = alpha^2 I.
class ParameterMap {
 public:
  ParameterMap(KernelFamily family, const OptimizerConfig& cfg, Eigen::Index input_dim)
      : family_(family), cfg_(cfg), input_dim_(input_dim) {}

  Eigen::Index size() const {
    Eigen::Index n = 2;
    if (!cfg_.fixed_noise_var) ++n;
    if (family_ == KernelFamily::rational_quadratic) ++n;
    return n;
  }

  bool feasible(const Eigen::VectorXd& theta) const {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double lo = (i == noise_index()) ? kLogNoiseStdMin : kLogParamMin;
      if (!(theta[i] >= lo && theta[i] <= kLogParamMax)) return false;
    }
    return true;
  }

  KernelSpec kernel(const Eigen::VectorXd& theta) const {
    KernelSpec k;
    k.family = family_;
    k.matern_nu = cfg_.matern_nu;
    k.gamma = cfg_.gamma;
    const double alpha = std::exp(theta[0]);
    k.signal_std = alpha;
    k.lengthscale = std::exp(theta[1]);
    if (family_ == KernelFamily::constant) k.sigma0_sq = alpha * alpha;
    if (family_ == KernelFamily::nonstationary_linear_se) {
      k.sigma_d = alpha * alpha * Eigen::MatrixXd::Identity(input_dim_, input_dim_);
    }
    if (family_ == KernelFamily::rational_quadratic) k.rq_alpha = std::exp(theta[size() - 1]);
    return k;
  }

  double noise_var(const Eigen::VectorXd& theta) const {
    if (cfg_.fixed_noise_var) return *cfg_.fixed_noise_var;
    const double s = std::exp(theta[2]);
    return s * s;
  }

  Eigen::VectorXd random_start(std::mt19937_64& rng) const {
    auto draw = [&](const LogUniformRange& r) {
      const double lo = std::log(r.lower);
      const double hi = std::log(r.upper);
      if (hi <= lo) return lo;
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    Eigen::VectorXd theta(size());
    theta[0] = draw(cfg_.signal_std);
    theta[1] = draw(cfg_.lengthscale);
    if (!cfg_.fixed_noise_var) theta[2] = draw(cfg_.noise_std);
    if (family_ == KernelFamily::rational_quadratic) theta[size() - 1] = draw(cfg_.rq_alpha);
    return theta;
  }

 private:
  Eigen::Index noise_index() const { return cfg_.fixed_noise_var ? -1 : 2; }

  KernelFamily family_;
  OptimizerConfig cfg_;
  Eigen::Index input_dim_;
};

}  // namespace detail

/// Multi-start Nelder-Mead maximization of the log marginal likelihood.
/// `gram(kernel, noise_var)` must return the Gram matrix for one candidate.
/// Restart r is seeded with cfg.seed + r; restarts may run in parallel and the
/// best one (lowest index on ties) wins, so the result is independent of the
/// thread count.
template <typename GramBuilder>
OptimizationResult maximize_likelihood(KernelFamily family, GramBuilder&& gram,
                                       const Eigen::VectorXd& targets, const OptimizerConfig& cfg,
                                       Eigen::Index input_dim = 1) {
  if (cfg.restarts < 1) throw ParameterError("restarts must be >= 1");
  const detail::ParameterMap map(family, cfg, input_dim);
  const Eigen::VectorXd y = targets.array() - cfg.target_offset;

  auto negative_lml = [&](const Eigen::VectorXd& theta) {
    if (!map.feasible(theta)) return std::numeric_limits<double>::infinity();
    try {
      const Eigen::MatrixXd k = gram(map.kernel(theta), map.noise_var(theta));
      const double lml = log_marginal_from_fit(factor_and_solve(k, y), y);
      return std::isfinite(lml) ? -lml : std::numeric_limits<double>::infinity();
    } catch (const NotPositiveDefiniteError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<NelderMeadResult> runs(cfg.restarts);
  parallel_for(cfg.restarts, cfg.threads, [&](std::size_t r) {
    std::mt19937_64 rng(cfg.seed + r);
    const Eigen::VectorXd start = map.random_start(rng);
    NelderMeadOptions opt;
    opt.max_iters = cfg.max_iters;
    runs[r] = nelder_mead(negative_lml, start, opt);
  });

  OptimizationResult best;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (!std::isfinite(runs[r].value)) continue;
    ++best.restarts_succeeded;
    const double lml = -runs[r].value;
    if (lml > best.log_likelihood) {
      best.log_likelihood = lml;
      best.best_restart = r;
      best.kernel = map.kernel(runs[r].x);
      best.noise_var = map.noise_var(runs[r].x);
    }
  }
  if (best.restarts_succeeded == 0) {
    throw OptimizationError("every restart failed to produce a positive definite Gram matrix");
  }
  return best;
}

/// ML hyperparameters for a distance GP. The distance matrix is reused for
/// every likelihood evaluation.
inline OptimizationResult optimize_hyperparameters(const std::vector<InputDistribution>& inputs,
                                                   const Eigen::VectorXd& targets,
                                                   const DistanceMatrix& dm, KernelFamily family,
                                                   const OptimizerConfig& cfg) {
  detail::check_training_sizes(inputs, targets, dm);
  std::vector<Eigen::VectorXd> means;
  if (family == KernelFamily::nonstationary_linear_se) means = detail::input_means(inputs);
  const Eigen::Index dim = dimension(inputs.front());
  auto gram = [&](const KernelSpec& k, double noise) {
    return family == KernelFamily::nonstationary_linear_se ? gram_matrix(dm, k, noise, &means)
                                                           : gram_matrix(dm, k, noise);
  };
  return maximize_likelihood(family, gram, targets, cfg, dim);
}

}  // namespace distgp
