// Command-line front end: gen-data, distances, train, predict, benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/experiments.hpp"
#include "distgp/gp.hpp"
#include "distgp/io.hpp"
#include "distgp/kernels.hpp"

namespace {

using namespace distgp;
using io::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

constexpr std::uint64_t kTrainSeedOffset = 1000;

struct Options {
  std::string out;
  std::uint64_t seed = 1;
  std::size_t threads = 0;

  // gen-data / benchmark
  std::string target = "v1";
  std::size_t n_train = 200;
  std::size_t samples = 10;
  double target_noise = 0.0;
  std::size_t grid = 30;

  // distances
  std::string dataset;
  std::string distance = "mcvmd";
  double b_max = 100.0;
  double p = 2.0;
  std::size_t quad_nodes = 2001;
  std::string input_class = "dirac";

  // train
  std::string distances;
  std::string kernel = "se";
  double matern_nu = 1.5;
  double gamma = 1.0;
  std::optional<double> rq_alpha;
  std::size_t restarts = 8;
  std::size_t max_iters = 400;
  std::optional<double> fix_noise;
  bool center = false;

  // predict
  std::string model;
  std::string inputs;
};

OptimizerConfig optimizer_config(const Options& o, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.restarts = o.restarts;
  cfg.max_iters = o.max_iters;
  cfg.seed = seed;
  cfg.threads = o.threads;
  cfg.fixed_noise_var = o.fix_noise;
  cfg.matern_nu = o.matern_nu;
  cfg.gamma = o.gamma;
  if (o.rq_alpha) cfg.rq_alpha = {*o.rq_alpha, *o.rq_alpha};
  return cfg;
}

int cmd_gen_data(const Options& o) {
  BenchmarkConfig cfg;
  cfg.n_train = o.n_train;
  cfg.samples_per_input = o.samples;
  cfg.target = target_function_from_string(o.target);
  cfg.seed = o.seed;
  cfg.target_noise_std = o.target_noise;
  io::write_json(o.out, io::to_json(generate_training_set(cfg)));
  return 0;
}

int cmd_distances(const Options& o) {
  const Dataset ds = io::dataset_from_json(io::read_json(o.dataset));
  DistanceSpec spec;
  spec.family = distance_family_from_string(o.distance);
  spec.b_max = o.b_max;
  spec.p = o.p;
  spec.quadrature.nodes = o.quad_nodes;
  const auto inputs = o.input_class == "gaussian" ? ds.gaussian_inputs() : ds.dirac_inputs;
  io::write_text(o.out, io::distance_matrix_csv(distance_matrix(inputs, spec, o.threads)));
  return 0;
}

int cmd_train(const Options& o) {
  const Dataset ds = io::dataset_from_json(io::read_json(o.dataset));
  DistanceMatrix dm = io::distance_matrix_from_csv(io::read_text(o.distances));
  dm.spec.quadrature.nodes = o.quad_nodes;
  if (static_cast<std::size_t>(dm.size()) != ds.size()) {
    throw ConsistencyError("distance matrix has " + std::to_string(dm.size()) +
                           " inputs but the dataset has " + std::to_string(ds.size()));
  }
  const auto inputs = requires_dirac(dm.spec.family) ? ds.dirac_inputs : ds.gaussian_inputs();
  const KernelFamily family = kernel_family_from_string(o.kernel);
  const double offset = o.center ? ds.targets.mean() : 0.0;

  OptimizerConfig cfg = optimizer_config(o, o.seed + kTrainSeedOffset);
  cfg.target_offset = offset;
  const OptimizationResult opt = optimize_hyperparameters(inputs, ds.targets, dm, family, cfg);
  const TrainedGP gp = fit(inputs, ds.targets, dm, opt.kernel, opt.noise_var, offset);

  json model = io::to_json(gp);
  model["log_likelihood"] = opt.log_likelihood;
  model["optimizer"] = {{"method", "nelder_mead_multistart"},
                        {"restarts", cfg.restarts},
                        {"restarts_succeeded", opt.restarts_succeeded},
                        {"max_iters", cfg.max_iters},
                        {"seed", cfg.seed}};
  io::write_json(o.out, model);
  return 0;
}

int cmd_predict(const Options& o) {
  const TrainedGP gp = io::model_from_json(io::read_json(o.model));
  const auto tests = io::distributions_from_json(io::read_json(o.inputs));
  std::vector<PredictionResult> preds;
  preds.reserve(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    try {
      preds.push_back(predict_dist(gp, tests[i]));
    } catch (Error& e) {
      e.add_context("test input " + std::to_string(i));
      throw;
    }
  }
  io::write_text(o.out, io::predictions_csv(preds));
  return 0;
}

int cmd_benchmark(const Options& o) {
  BenchmarkConfig cfg;
  cfg.n_train = o.n_train;
  cfg.samples_per_input = o.samples;
  cfg.target = target_function_from_string(o.target);
  cfg.seed = o.seed;
  cfg.target_noise_std = o.target_noise;
  cfg.grid_mean_nodes = o.grid;
  cfg.grid_var_nodes = o.grid;
  cfg.b_max = o.b_max;
  cfg.wasserstein_p = o.p;
  cfg.center_targets = o.center;
  cfg.threads = o.threads;
  cfg.optimizer = optimizer_config(o, 0);

  const BenchmarkReport report = run_benchmark(cfg);

  const std::filesystem::path dir(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  bool any_ok = false;
  for (const auto& m : report.methods) {
    if (m.ok) {
      any_ok = true;
      io::write_text((dir / ("grid_" + m.name + ".csv")).string(), io::error_grid_csv(m.grid));
    } else {
      std::cerr << "pipeline " << m.name << " failed: " << m.error << "\n";
    }
  }
  io::write_json((dir / "report.json").string(), io::report_json(report));
  io::write_json((dir / "timings.json").string(), io::timings_json(report));

  for (const auto& m : report.methods) {
    std::cout << m.name << ": ";
    if (m.ok) {
      std::cout << "rmse_full=" << io::format_double(m.grid.rmse_full)
                << " rmse_interior=" << io::format_double(m.grid.rmse_interior) << "\n";
    } else {
      std::cout << "failed\n";
    }
  }
  return any_ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process regression over probability distributions"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--threads", o.threads, "Worker threads (0: DISTGP_THREADS or hardware)");
  };
  auto add_optimizer = [&](CLI::App* sub) {
    sub->add_option("--restarts", o.restarts, "Optimizer restarts")->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", o.max_iters, "Simplex iterations per restart");
    sub->add_option("--fix-noise", o.fix_noise, "Fix the noise variance instead of optimizing it")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--center", o.center, "Subtract the target mean before fitting");
  };
  const std::vector<std::string> targets{"v1", "v2"};
  const std::vector<std::string> families{"mcvmd", "wasserstein", "lp",
                                          "total_variation", "hellinger", "jensen_shannon"};
  const std::vector<std::string> kernels{"constant", "se", "matern", "exponential",
                                         "gamma_exponential", "rational_quadratic",
                                         "nonstationary_linear_se"};

  auto* gen = app.add_subcommand("gen-data", "Generate a benchmark training dataset");
  gen->add_option("--out", o.out, "Dataset JSON path")->required();
  gen->add_option("--target", o.target, "Target function")->check(CLI::IsMember(targets));
  gen->add_option("--n-train", o.n_train, "Number of training Gaussians")->check(CLI::PositiveNumber);
  gen->add_option("--samples", o.samples, "Deterministic samples per input")->check(CLI::PositiveNumber);
  gen->add_option("--target-noise", o.target_noise, "Std of Gaussian noise added to targets");
  add_common(gen);

  auto* dist = app.add_subcommand("distances", "Compute the pairwise distance matrix of a dataset");
  dist->add_option("--dataset", o.dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  dist->add_option("--out", o.out, "Distance matrix CSV path")->required();
  dist->add_option("--distance", o.distance, "Distance family")->check(CLI::IsMember(families));
  dist->add_option("--bmax", o.b_max, "mCvMD b_max")->check(CLI::PositiveNumber);
  dist->add_option("--p", o.p, "Order for Wasserstein / L_p");
  dist->add_option("--quad-nodes", o.quad_nodes, "Quadrature nodes (odd)");
  dist->add_option("--input-class", o.input_class, "Which dataset encoding to compare")
      ->check(CLI::IsMember({"dirac", "gaussian"}));
  add_common(dist);

  auto* train = app.add_subcommand("train", "Fit hyperparameters by maximum likelihood");
  train->add_option("--dataset", o.dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--distances", o.distances, "Distance matrix CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Model JSON path")->required();
  train->add_option("--kernel", o.kernel, "Kernel family")->check(CLI::IsMember(kernels));
  train->add_option("--matern-nu", o.matern_nu, "Matern nu (0.5, 1.5, 2.5)");
  train->add_option("--gamma", o.gamma, "Gamma-exponential shape in (0, 2]");
  train->add_option("--rq-alpha", o.rq_alpha, "Rational-quadratic shape start value");
  train->add_option("--quad-nodes", o.quad_nodes, "Quadrature nodes for continuous distances");
  add_optimizer(train);
  add_common(train);

  auto* predict = app.add_subcommand("predict", "Predict with a trained model");
  predict->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--inputs", o.inputs, "JSON list of test distributions")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", o.out, "Prediction CSV path")->required();

  auto* bench = app.add_subcommand("benchmark", "Run the mCvMD / Wasserstein / mean-kernel comparison");
  bench->add_option("--out-dir", o.out, "Output directory")->required();
  bench->add_option("--target", o.target, "Target function")->check(CLI::IsMember(targets));
  bench->add_option("--n-train", o.n_train, "Number of training Gaussians")->check(CLI::PositiveNumber);
  bench->add_option("--samples", o.samples, "Deterministic samples per input")->check(CLI::PositiveNumber);
  bench->add_option("--grid", o.grid, "Grid nodes per axis")->check(CLI::PositiveNumber);
  bench->add_option("--bmax", o.b_max, "mCvMD b_max")->check(CLI::PositiveNumber);
  bench->add_option("--p", o.p, "Wasserstein order");
  bench->add_option("--target-noise", o.target_noise, "Std of Gaussian noise added to targets");
  add_optimizer(bench);
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*dist) return cmd_distances(o);
    if (*train) return cmd_train(o);
    if (*predict) return cmd_predict(o);
    if (*bench) return cmd_benchmark(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return e.error_class() == ErrorClass::numerical ? kExitNumerical : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
