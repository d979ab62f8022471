// Fits a GP whose inputs are sample sets drawn from Gaussians, then predicts
// the target for an unseen Gaussian.

#include <cmath>
#include <iostream>
#include <random>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/experiments.hpp"
#include "distgp/gp.hpp"

int main() {
  using namespace distgp;

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), var(0.1, 2.0);

  std::vector<InputDistribution> inputs;
  Eigen::VectorXd targets(40);
  for (int i = 0; i < 40; ++i) {
    const double mu = mean(rng);
    const double v = var(rng);
    inputs.emplace_back(deterministic_sample(Gaussian::univariate(mu, v), 10));
    targets[i] = v1_eval(mu, v);
  }

  DistanceSpec spec;
  spec.family = DistanceFamily::wasserstein;
  const DistanceMatrix dm = distance_matrix(inputs, spec);

  OptimizerConfig opt;
  opt.restarts = 4;
  opt.seed = 11;
  const OptimizationResult best =
      optimize_hyperparameters(inputs, targets, dm, KernelFamily::squared_exponential, opt);
  const TrainedGP gp = fit(inputs, targets, dm, best.kernel, best.noise_var);

  const double mu = 0.5;
  const double v = 1.0;
  const PredictionResult r = predict_dist(gp, deterministic_sample(Gaussian::univariate(mu, v), 10));
  std::cout << "alpha=" << best.kernel.signal_std << " lengthscale=" << best.kernel.lengthscale
            << " noise_var=" << best.noise_var << "\n"
            << "prediction at N(0.5, 1): " << r.mean << " +/- " << std::sqrt(r.variance)
            << " (truth " << v1_eval(mu, v) << ")\n";
}
