#pragma once

// Baseline GP on Gaussian inputs using the expected SE kernel. Unlike the
// distance GPs, its Gram matrix depends on the lengthscale and is rebuilt for
// every hyperparameter candidate.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "distgp/distributions.hpp"
#include "distgp/gp.hpp"
#include "distgp/kernels.hpp"
#include "distgp/parallel.hpp"

namespace distgp {

inline Eigen::MatrixXd mean_kernel_gram(const std::vector<Gaussian>& inputs, double alpha,
                                        double lengthscale, double noise_var,
                                        std::size_t threads = 1) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd k(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    for (Eigen::Index j = i; j < n; ++j) {
      k(i, j) = mean_kernel_se_gaussian(inputs[row], inputs[static_cast<std::size_t>(j)], alpha,
                                        lengthscale);
    }
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i);
    k(i, i) += noise_var;
  }
  return k;
}

struct MeanKernelGP {
  double signal_std = 1.0;
  double lengthscale = 1.0;
  double noise_var = 0.0;
  double target_offset = 0.0;
  GramFit gram;
  std::vector<Gaussian> train_inputs;

  double jitter_used() const { return gram.jitter; }

  PredictionResult predict(const Gaussian& test) const {
    Eigen::VectorXd k_star(static_cast<Eigen::Index>(train_inputs.size()));
    for (std::size_t i = 0; i < train_inputs.size(); ++i) {
      k_star[static_cast<Eigen::Index>(i)] =
          mean_kernel_se_gaussian(test, train_inputs[i], signal_std, lengthscale);
    }
    const double k_self = mean_kernel_se_gaussian(test, test, signal_std, lengthscale);
    PredictionResult r = predict_from_cross(gram, k_star, k_self);
    r.mean += target_offset;
    return r;
  }
};

inline MeanKernelGP fit_mean_kernel_gp(const std::vector<Gaussian>& inputs,
                                       const Eigen::VectorXd& targets, double signal_std,
                                       double lengthscale, double noise_var,
                                       double target_offset = 0.0) {
  if (inputs.empty() || static_cast<Eigen::Index>(inputs.size()) != targets.size()) {
    throw DimensionError("mean-kernel GP needs one target per input");
  }
  MeanKernelGP gp;
  gp.signal_std = signal_std;
  gp.lengthscale = lengthscale;
  gp.noise_var = noise_var;
  gp.target_offset = target_offset;
  gp.train_inputs = inputs;
  const Eigen::VectorXd y = targets.array() - target_offset;
  gp.gram = factor_and_solve(mean_kernel_gram(inputs, signal_std, lengthscale, noise_var), y);
  return gp;
}

/// ML hyperparameters (alpha, l, noise) of the mean-kernel GP by the same
/// multi-start search the distance GPs use.
inline OptimizationResult optimize_mean_kernel(const std::vector<Gaussian>& inputs,
                                               const Eigen::VectorXd& targets,
                                               const OptimizerConfig& cfg) {
  auto gram = [&](const KernelSpec& k, double noise) {
    return mean_kernel_gram(inputs, k.signal_std, k.lengthscale, noise, 1);
  };
  return maximize_likelihood(KernelFamily::squared_exponential, gram, targets, cfg,
                             inputs.empty() ? 1 : inputs.front().dimension());
}

}  // namespace distgp
