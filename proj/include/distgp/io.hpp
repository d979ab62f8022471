#pragma once

// JSON and CSV encodings of distributions, specs, datasets, models, distance
// matrices, error grids and benchmark reports.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/distributions.hpp"
#include "distgp/errors.hpp"
#include "distgp/experiments.hpp"
#include "distgp/gp.hpp"
#include "distgp/kernels.hpp"

namespace distgp::io {

using nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Eigen helpers

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace detail

inline Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::number(j[i], "vector entry");
  return v;
}

inline Eigen::MatrixXd matrix_from_rows(const json& j) {
  if (!j.is_array()) throw FormatError("expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError("ragged matrix rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = detail::number(row[static_cast<std::size_t>(c)], "matrix entry");
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Distributions

inline json to_json(const InputDistribution& d) {
  if (const auto* g = std::get_if<Gaussian>(&d)) {
    return {{"type", "gaussian"}, {"mean", to_json(g->mean())}, {"cov", matrix_rows(g->covariance())}};
  }
  const auto& m = std::get<DiracMixture>(d);
  return {{"type", "dirac"}, {"weights", to_json(m.weights())}, {"points", matrix_rows(m.points())}};
}

inline InputDistribution distribution_from_json(const json& j) {
  const json& type = detail::field(j, "type");
  if (type == "gaussian") {
    return Gaussian(vector_from_json(detail::field(j, "mean")),
                    matrix_from_rows(detail::field(j, "cov")));
  }
  if (type == "dirac") {
    return DiracMixture(vector_from_json(detail::field(j, "weights")),
                        matrix_from_rows(detail::field(j, "points")));
  }
  throw FormatError("unknown distribution type " + type.dump());
}

inline json to_json(const std::vector<InputDistribution>& list) {
  json a = json::array();
  for (const auto& d : list) a.push_back(to_json(d));
  return a;
}

inline std::vector<InputDistribution> distributions_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("expected an array of distributions");
  std::vector<InputDistribution> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      out.push_back(distribution_from_json(j[i]));
    } catch (Error& e) {
      e.add_context("distribution " + std::to_string(i));
      throw;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Specs

inline json to_json(const KernelSpec& k) {
  json j{{"family", std::string(to_string(k.family))}};
  switch (k.family) {
    case KernelFamily::constant:
      j["sigma0_sq"] = k.sigma0_sq;
      break;
    case KernelFamily::nonstationary_linear_se:
      j["lengthscale"] = k.lengthscale;
      j["sigma_d"] = matrix_rows(k.sigma_d);
      break;
    default:
      j["alpha"] = k.signal_std;
      j["lengthscale"] = k.lengthscale;
      if (k.family == KernelFamily::matern) j["nu"] = k.matern_nu;
      if (k.family == KernelFamily::gamma_exponential) j["gamma"] = k.gamma;
      if (k.family == KernelFamily::rational_quadratic) j["rq_alpha"] = k.rq_alpha;
      break;
  }
  return j;
}

inline KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.family = kernel_family_from_string(detail::field(j, "family").get<std::string>());
  auto read = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::number(j.at(key), key);
  };
  read("alpha", k.signal_std);
  read("lengthscale", k.lengthscale);
  read("nu", k.matern_nu);
  read("gamma", k.gamma);
  read("rq_alpha", k.rq_alpha);
  read("sigma0_sq", k.sigma0_sq);
  if (j.contains("sigma_d")) k.sigma_d = matrix_from_rows(j.at("sigma_d"));
  k.check();
  return k;
}

inline json to_json(const DistanceSpec& s) {
  json q{{"nodes", s.quadrature.nodes}};
  if (s.quadrature.lower) q["lower"] = *s.quadrature.lower;
  if (s.quadrature.upper) q["upper"] = *s.quadrature.upper;
  return {{"family", std::string(to_string(s.family))},
          {"b_max", s.b_max},
          {"p", s.p},
          {"mcvmd_constant", s.mcvmd_constant},
          {"quadrature", q}};
}

inline DistanceSpec distance_spec_from_json(const json& j) {
  DistanceSpec s;
  s.family = distance_family_from_string(detail::field(j, "family").get<std::string>());
  if (j.contains("b_max")) s.b_max = detail::number(j.at("b_max"), "b_max");
  if (j.contains("p")) s.p = detail::number(j.at("p"), "p");
  if (j.contains("mcvmd_constant")) s.mcvmd_constant = detail::number(j.at("mcvmd_constant"), "mcvmd_constant");
  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    if (q.contains("nodes")) s.quadrature.nodes = q.at("nodes").get<std::size_t>();
    if (q.contains("lower")) s.quadrature.lower = detail::number(q.at("lower"), "lower");
    if (q.contains("upper")) s.quadrature.upper = detail::number(q.at("upper"), "upper");
  }
  s.check();
  return s;
}

// ---------------------------------------------------------------------------
// Dataset

inline json to_json(const Dataset& ds) {
  std::vector<InputDistribution> gaussians(ds.gaussians.begin(), ds.gaussians.end());
  return {{"seed", ds.seed},
          {"target_fn", std::string(to_string(ds.target))},
          {"gaussians", to_json(gaussians)},
          {"inputs", to_json(ds.dirac_inputs)},
          {"targets", to_json(ds.targets)}};
}

inline Dataset dataset_from_json(const json& j) {
  Dataset ds;
  ds.seed = detail::field(j, "seed").get<std::uint64_t>();
  ds.target = target_function_from_string(detail::field(j, "target_fn").get<std::string>());
  for (auto& d : distributions_from_json(detail::field(j, "gaussians"))) {
    if (!is_gaussian(d)) throw FormatError("dataset 'gaussians' must hold Gaussians");
    ds.gaussians.push_back(std::get<Gaussian>(std::move(d)));
  }
  ds.dirac_inputs = distributions_from_json(detail::field(j, "inputs"));
  ds.targets = vector_from_json(detail::field(j, "targets"));
  if (ds.dirac_inputs.size() != ds.gaussians.size() ||
      static_cast<std::size_t>(ds.targets.size()) != ds.gaussians.size()) {
    throw ConsistencyError("dataset lists have different lengths");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Model

inline json to_json(const TrainedGP& gp) {
  const Eigen::Index n = gp.chol.rows();
  json chol = json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) chol.push_back(gp.chol(i, j));
  }
  return {{"kernel", to_json(gp.kernel)},
          {"noise_var", gp.noise_var},
          {"jitter_used", gp.jitter_used},
          {"target_offset", gp.target_offset},
          {"distance", to_json(gp.distance_spec)},
          {"train_inputs", to_json(gp.train_inputs)},
          {"targets", to_json(gp.train_targets)},
          {"weights", to_json(gp.weights)},
          {"chol", {{"rows", n}, {"data", chol}}}};
}

inline TrainedGP model_from_json(const json& j) {
  TrainedGP gp;
  gp.kernel = kernel_from_json(detail::field(j, "kernel"));
  gp.noise_var = detail::number(detail::field(j, "noise_var"), "noise_var");
  gp.jitter_used = detail::number(detail::field(j, "jitter_used"), "jitter_used");
  if (j.contains("target_offset")) gp.target_offset = detail::number(j.at("target_offset"), "target_offset");
  gp.distance_spec = distance_spec_from_json(detail::field(j, "distance"));
  gp.train_inputs = distributions_from_json(detail::field(j, "train_inputs"));
  gp.train_targets = vector_from_json(detail::field(j, "targets"));
  gp.weights = vector_from_json(detail::field(j, "weights"));
  const json& chol = detail::field(j, "chol");
  const auto n = detail::field(chol, "rows").get<Eigen::Index>();
  const Eigen::VectorXd data = vector_from_json(detail::field(chol, "data"));
  const auto count = static_cast<Eigen::Index>(gp.train_inputs.size());
  if (n != count || data.size() != n * n || gp.weights.size() != n || gp.train_targets.size() != n) {
    throw ConsistencyError("model arrays disagree on the training size");
  }
  gp.chol.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) gp.chol(r, c) = data[r * n + c];
  }
  if (!gp.kernel.stationary()) gp.train_means = distgp::detail::input_means(gp.train_inputs);
  return gp;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// CSV

/// `# family=<tag> b_max=<v> p=<v> n=<N>` followed by N rows of N values.
inline std::string distance_matrix_csv(const DistanceMatrix& dm) {
  std::ostringstream out;
  out << "# family=" << to_string(dm.spec.family) << " b_max=" << format_double(dm.spec.b_max)
      << " p=" << format_double(dm.spec.p) << " n=" << dm.size() << "\n";
  for (Eigen::Index i = 0; i < dm.size(); ++i) {
    for (Eigen::Index j = 0; j < dm.size(); ++j) {
      if (j > 0) out << ',';
      out << format_double(dm(i, j));
    }
    out << '\n';
  }
  return out.str();
}

/// Parses the CSV written by distance_matrix_csv. Quadrature settings are not
/// part of the format and keep their defaults.
inline DistanceMatrix distance_matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw FormatError("distance matrix CSV must start with a '# family=...' header");
  }
  DistanceSpec spec;
  long long n = -1;
  std::istringstream header(line.substr(2));
  std::string token;
  bool have_family = false;
  while (header >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw FormatError("bad header token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "family") {
        spec.family = distance_family_from_string(value);
        have_family = true;
      } else if (key == "b_max") {
        spec.b_max = std::stod(value);
      } else if (key == "p") {
        spec.p = std::stod(value);
      } else if (key == "n") {
        n = std::stoll(value);
      }
    } catch (const std::logic_error&) {
      throw FormatError("bad header value '" + token + "'");
    }
  }
  if (!have_family || n < 0) throw FormatError("distance matrix header needs family and n");
  spec.check();

  Eigen::MatrixXd values(n, n);
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw FormatError("distance matrix has fewer than n rows");
    std::istringstream row(line);
    std::string cell;
    long long j = 0;
    while (std::getline(row, cell, ',')) {
      if (j >= n) throw FormatError("distance matrix row " + std::to_string(i) + " is too long");
      try {
        values(i, j++) = std::stod(cell);
      } catch (const std::logic_error&) {
        throw FormatError("bad number '" + cell + "' in distance matrix");
      }
    }
    if (j != n) throw FormatError("distance matrix row " + std::to_string(i) + " is too short");
  }
  for (long long i = 0; i < n; ++i) {
    if (values(i, i) != 0.0) throw FormatError("distance matrix diagonal must be zero");
    for (long long j = 0; j < n; ++j) {
      if (values(i, j) < 0.0 || values(i, j) != values(j, i)) {
        throw FormatError("distance matrix must be symmetric and non-negative");
      }
    }
  }
  return {std::move(values), spec};
}

inline std::string error_grid_csv(const ErrorGrid& grid) {
  std::ostringstream out;
  out << "mu,var,prediction,pred_var,truth,sq_error\n";
  for (const auto& n : grid.nodes) {
    out << format_double(n.mu) << ',' << format_double(n.var) << ',' << format_double(n.prediction)
        << ',' << format_double(n.pred_var) << ',' << format_double(n.truth) << ','
        << format_double(n.sq_error) << '\n';
  }
  return out.str();
}

inline std::string predictions_csv(const std::vector<PredictionResult>& preds) {
  std::ostringstream out;
  out << "index,mean,variance\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << i << ',' << format_double(preds[i].mean) << ',' << format_double(preds[i].variance)
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Benchmark report

inline json to_json(const BenchmarkConfig& c) {
  auto interval = [](const Interval& i) { return json::array({i.lower, i.upper}); };
  return {{"n_train", c.n_train},
          {"samples_per_input", c.samples_per_input},
          {"mean_range", interval(c.mean_range)},
          {"var_range", interval(c.var_range)},
          {"target_fn", std::string(to_string(c.target))},
          {"grid", {{"mean_nodes", c.grid_mean_nodes},
                    {"var_nodes", c.grid_var_nodes},
                    {"mean_range", interval(c.grid_mean_range)},
                    {"var_range", interval(c.grid_var_range)}}},
          {"interior_crop", {{"mean", interval(c.crop_mean)}, {"var", interval(c.crop_var)}}},
          {"seed", c.seed},
          {"target_noise_std", c.target_noise_std},
          {"b_max", c.b_max},
          {"wasserstein_p", c.wasserstein_p},
          {"center_targets", c.center_targets},
          {"optimizer", {{"method", "nelder_mead_multistart"},
                         {"restarts", c.optimizer.restarts},
                         {"max_iters", c.optimizer.max_iters},
                         {"fixed_noise_var", c.optimizer.fixed_noise_var
                                                 ? json(*c.optimizer.fixed_noise_var)
                                                 : json(nullptr)}}}};
}

/// Deterministic report: timings are deliberately excluded (see timings_json).
inline json report_json(const BenchmarkReport& r) {
  json methods = json::array();
  json comparison = json::object();
  for (const auto& m : r.methods) {
    json j{{"name", m.name}, {"status", m.ok ? "ok" : "failed"}};
    if (m.ok) {
      j["rmse_full"] = m.grid.rmse_full;
      j["rmse_interior"] = m.grid.rmse_interior;
      j["interior_nodes"] = m.grid.interior_count;
      j["kernel"] = to_json(m.kernel);
      j["noise_var"] = m.noise_var;
      j["jitter_used"] = m.jitter_used;
      j["log_likelihood"] = m.log_likelihood;
      j["restarts_succeeded"] = m.restarts_succeeded;
      if (m.name != "mean_kernel") j["distance_matrix_builds"] = m.distance_matrix_builds;
      comparison[m.name] = {{"rmse_full", m.grid.rmse_full}, {"rmse_interior", m.grid.rmse_interior}};
    } else {
      j["error"] = m.error;
      comparison[m.name] = nullptr;
    }
    methods.push_back(std::move(j));
  }
  return {{"config", to_json(r.config)}, {"methods", methods}, {"comparison", comparison}};
}

inline json timings_json(const BenchmarkReport& r) {
  json j = json::object();
  for (const auto& m : r.methods) j[m.name] = {{"seconds", m.seconds}};
  return j;
}

}  // namespace distgp::io
