#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/distributions.hpp"
#include "distgp/errors.hpp"
#include "distgp/gp.hpp"
#include "distgp/kernels.hpp"
#include "distgp/mean_kernel_gp.hpp"
#include "distgp/parallel.hpp"

namespace distgp {

enum class TargetFunction { v1, v2 };

inline std::string_view to_string(TargetFunction t) { return t == TargetFunction::v1 ? "v1" : "v2"; }

inline TargetFunction target_function_from_string(std::string_view s) {
  if (s == "v1") return TargetFunction::v1;
  if (s == "v2") return TargetFunction::v2;
  throw ParameterError("unknown target function '" + std::string(s) + "'");
}

/// Quadratic target: mu^2 + sigma^2.
inline double v1_eval(double mu, double var) {
  if (var < 0.0) throw DomainError("variance must be non-negative");
  return mu * mu + var;
}

/// Modified Rosenbrock target: 0.1 (mu + 4)^2 + 0.1 (mu^2 - sigma^2 - 4)^2.
inline double v2_eval(double mu, double var) {
  if (var < 0.0) throw DomainError("variance must be non-negative");
  const double a = mu + 4.0;
  const double b = mu * mu - var - 4.0;
  return 0.1 * a * a + 0.1 * b * b;
}

inline double target_eval(TargetFunction t, double mu, double var) {
  return t == TargetFunction::v1 ? v1_eval(mu, var) : v2_eval(mu, var);
}

struct Interval {
  double lower;
  double upper;

  bool contains(double x) const { return x >= lower - 1e-12 && x <= upper + 1e-12; }
};

struct BenchmarkConfig {
  std::size_t n_train = 200;
  std::size_t samples_per_input = 10;
  Interval mean_range{-5.0, 5.0};
  Interval var_range{0.01, 4.0};
  TargetFunction target = TargetFunction::v2;
  std::size_t grid_mean_nodes = 30;
  std::size_t grid_var_nodes = 30;
  Interval grid_mean_range{-5.0, 5.0};
  Interval grid_var_range{0.01, 4.0};
  Interval crop_mean{-4.5, 4.5};
  Interval crop_var{0.1, 3.9};
  std::uint64_t seed = 1;
  double target_noise_std = 0.0;
  double b_max = 100.0;
  double wasserstein_p = 2.0;
  bool center_targets = false;
  OptimizerConfig optimizer{};
  std::size_t threads = 0;

  void check() const {
    auto ordered = [](const Interval& i, const char* what) {
      if (!(i.lower <= i.upper)) throw ParameterError(std::string(what) + " range is not ordered");
    };
    ordered(mean_range, "mean");
    ordered(var_range, "variance");
    ordered(grid_mean_range, "grid mean");
    ordered(grid_var_range, "grid variance");
    ordered(crop_mean, "crop mean");
    ordered(crop_var, "crop variance");
    if (!(var_range.lower > 0.0) || !(grid_var_range.lower > 0.0)) {
      throw ParameterError("variance ranges must be positive");
    }
    if (n_train < 1 || samples_per_input < 1 || grid_mean_nodes < 1 || grid_var_nodes < 1) {
      throw ParameterError("counts must be >= 1");
    }
    if (target_noise_std < 0.0) throw ParameterError("target noise must be non-negative");
  }
};

/// Training data in both input encodings, plus provenance.
struct Dataset {
  std::vector<Gaussian> gaussians;
  std::vector<InputDistribution> dirac_inputs;
  Eigen::VectorXd targets;
  std::uint64_t seed = 0;
  TargetFunction target = TargetFunction::v1;

  std::size_t size() const { return gaussians.size(); }

  std::vector<InputDistribution> gaussian_inputs() const {
    return {gaussians.begin(), gaussians.end()};
  }
};

inline Dataset generate_training_set(const BenchmarkConfig& cfg) {
  cfg.check();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> mean_draw(cfg.mean_range.lower, cfg.mean_range.upper);
  std::uniform_real_distribution<double> var_draw(cfg.var_range.lower, cfg.var_range.upper);

  Dataset ds;
  ds.seed = cfg.seed;
  ds.target = cfg.target;
  ds.targets.resize(static_cast<Eigen::Index>(cfg.n_train));
  for (std::size_t i = 0; i < cfg.n_train; ++i) {
    const double mu = mean_draw(rng);
    const double var = var_draw(rng);
    ds.gaussians.push_back(Gaussian::univariate(mu, var));
    ds.targets[static_cast<Eigen::Index>(i)] = target_eval(cfg.target, mu, var);
  }
  if (cfg.target_noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.target_noise_std);
    for (Eigen::Index i = 0; i < ds.targets.size(); ++i) ds.targets[i] += noise(rng);
  }
  for (const auto& g : ds.gaussians) {
    ds.dirac_inputs.emplace_back(
        deterministic_sample(g, static_cast<Eigen::Index>(cfg.samples_per_input)));
  }
  return ds;
}

// ---------------------------------------------------------------------------

struct GridNode {
  double mu = 0.0;
  double var = 0.0;
  double prediction = 0.0;
  double pred_var = 0.0;
  double truth = 0.0;
  double sq_error = 0.0;
};

struct ErrorGrid {
  std::size_t mean_nodes = 0;
  std::size_t var_nodes = 0;
  std::vector<GridNode> nodes;  // row-major: mean index outer, variance index inner
  double rmse_full = 0.0;
  double rmse_interior = 0.0;
  std::size_t interior_count = 0;
};

inline std::vector<double> linspace(const Interval& range, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = 0.5 * (range.lower + range.upper);
    return out;
  }
  const double step = (range.upper - range.lower) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = range.lower + step * static_cast<double>(i);
  out[count - 1] = range.upper;
  return out;
}

/// Recomputes the full and interior-crop RMSE from the node fields.
inline void summarize(ErrorGrid& grid, const Interval& crop_mean, const Interval& crop_var) {
  double full = 0.0;
  double interior = 0.0;
  std::size_t n_interior = 0;
  for (const auto& node : grid.nodes) {
    full += node.sq_error;
    if (crop_mean.contains(node.mu) && crop_var.contains(node.var)) {
      interior += node.sq_error;
      ++n_interior;
    }
  }
  grid.rmse_full = grid.nodes.empty() ? 0.0 : std::sqrt(full / static_cast<double>(grid.nodes.size()));
  grid.rmse_interior =
      n_interior == 0 ? 0.0 : std::sqrt(interior / static_cast<double>(n_interior));
  grid.interior_count = n_interior;
}

using GridPredictor = std::function<PredictionResult(double mu, double var)>;
using TruthFunction = std::function<double(double mu, double var)>;

inline ErrorGrid evaluate_grid(const GridPredictor& predictor, const BenchmarkConfig& cfg,
                               const TruthFunction& truth) {
  const auto mus = linspace(cfg.grid_mean_range, cfg.grid_mean_nodes);
  const auto vars = linspace(cfg.grid_var_range, cfg.grid_var_nodes);
  ErrorGrid grid;
  grid.mean_nodes = mus.size();
  grid.var_nodes = vars.size();
  grid.nodes.resize(mus.size() * vars.size());
  parallel_for(grid.nodes.size(), cfg.threads, [&](std::size_t k) {
    GridNode& node = grid.nodes[k];
    node.mu = mus[k / vars.size()];
    node.var = vars[k % vars.size()];
    try {
      const PredictionResult r = predictor(node.mu, node.var);
      node.prediction = r.mean;
      node.pred_var = r.variance;
    } catch (Error& e) {
      e.add_context("grid node (mu=" + std::to_string(node.mu) + ", var=" +
                    std::to_string(node.var) + ")");
      throw;
    }
    node.truth = truth(node.mu, node.var);
    const double err = node.prediction - node.truth;
    node.sq_error = err * err;
  });
  summarize(grid, cfg.crop_mean, cfg.crop_var);
  return grid;
}

// ---------------------------------------------------------------------------

struct MethodReport {
  std::string name;
  bool ok = false;
  std::string error;
  ErrorGrid grid;
  KernelSpec kernel;
  double noise_var = 0.0;
  double jitter_used = 0.0;
  double log_likelihood = 0.0;
  std::size_t restarts_succeeded = 0;
  std::size_t distance_matrix_builds = 0;
  double seconds = 0.0;  // wall clock; not part of the deterministic report
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<MethodReport> methods;

  const MethodReport* find(std::string_view name) const {
    for (const auto& m : methods) {
      if (m.name == name) return &m;
    }
    return nullptr;
  }
};

namespace detail {

inline constexpr std::uint64_t kOptimizerSeedOffset = 1000;

inline OptimizerConfig pipeline_optimizer(const BenchmarkConfig& cfg, std::uint64_t index,
                                          double offset) {
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = cfg.seed + kOptimizerSeedOffset * (index + 1);
  opt.threads = cfg.threads;
  opt.target_offset = offset;
  return opt;
}

template <typename Body>
MethodReport run_pipeline(std::string name, Body&& body) {
  MethodReport report;
  report.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  try {
    body(report);
    report.ok = true;
  } catch (const Error& e) {
    report.ok = false;
    report.error = std::string(e.kind()) + ": " + e.what();
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace detail

/// Distance GP pipeline: one distance matrix, ML hyperparameters, grid error.
inline MethodReport run_distance_pipeline(const std::string& name, const Dataset& ds,
                                          const DistanceSpec& spec, const BenchmarkConfig& cfg,
                                          std::uint64_t index) {
  return detail::run_pipeline(name, [&](MethodReport& report) {
    const double offset = cfg.center_targets ? ds.targets.mean() : 0.0;
    const std::size_t builds_before = instrumentation::distance_matrix_builds().load();
    const DistanceMatrix dm = distance_matrix(ds.dirac_inputs, spec, cfg.threads);
    const OptimizationResult opt =
        optimize_hyperparameters(ds.dirac_inputs, ds.targets, dm,
                                 KernelFamily::squared_exponential,
                                 detail::pipeline_optimizer(cfg, index, offset));
    const TrainedGP gp = fit(ds.dirac_inputs, ds.targets, dm, opt.kernel, opt.noise_var, offset);
    report.distance_matrix_builds =
        instrumentation::distance_matrix_builds().load() - builds_before;
    const auto samples = static_cast<Eigen::Index>(cfg.samples_per_input);
    report.grid = evaluate_grid(
        [&](double mu, double var) {
          return predict_dist(gp, deterministic_sample(Gaussian::univariate(mu, var), samples));
        },
        cfg, [&](double mu, double var) { return target_eval(cfg.target, mu, var); });
    report.kernel = gp.kernel;
    report.noise_var = gp.noise_var;
    report.jitter_used = gp.jitter_used;
    report.log_likelihood = opt.log_likelihood;
    report.restarts_succeeded = opt.restarts_succeeded;
  });
}

inline MethodReport run_mean_kernel_pipeline(const Dataset& ds, const BenchmarkConfig& cfg,
                                             std::uint64_t index) {
  return detail::run_pipeline("mean_kernel", [&](MethodReport& report) {
    const double offset = cfg.center_targets ? ds.targets.mean() : 0.0;
    const OptimizationResult opt =
        optimize_mean_kernel(ds.gaussians, ds.targets, detail::pipeline_optimizer(cfg, index, offset));
    const MeanKernelGP gp = fit_mean_kernel_gp(ds.gaussians, ds.targets, opt.kernel.signal_std,
                                               opt.kernel.lengthscale, opt.noise_var, offset);
    report.grid = evaluate_grid(
        [&](double mu, double var) { return gp.predict(Gaussian::univariate(mu, var)); }, cfg,
        [&](double mu, double var) { return target_eval(cfg.target, mu, var); });
    report.kernel = opt.kernel;
    report.noise_var = opt.noise_var;
    report.jitter_used = gp.jitter_used();
    report.log_likelihood = opt.log_likelihood;
    report.restarts_succeeded = opt.restarts_succeeded;
  });
}

/// Runs the mCvMD GP, the Wasserstein GP and the mean-kernel GP on one
/// generated dataset. A failing pipeline is recorded and the others still run.
inline BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
  cfg.check();
  const Dataset ds = generate_training_set(cfg);

  DistanceSpec mcvmd;
  mcvmd.family = DistanceFamily::mcvmd;
  mcvmd.b_max = cfg.b_max;
  DistanceSpec wasserstein;
  wasserstein.family = DistanceFamily::wasserstein;
  wasserstein.p = cfg.wasserstein_p;

  BenchmarkReport report;
  report.config = cfg;
  report.methods.push_back(run_distance_pipeline("mcvmd", ds, mcvmd, cfg, 0));
  report.methods.push_back(run_distance_pipeline("wasserstein", ds, wasserstein, cfg, 1));
  report.methods.push_back(run_mean_kernel_pipeline(ds, cfg, 2));
  return report;
}

}  // namespace distgp
