#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace distgp {

struct NelderMeadOptions {
  std::size_t max_iters = 400;
  double initial_step = 0.5;
  // Stop when the spread of simplex values and the simplex diameter both drop
  // below these.
  double f_tolerance = 1e-9;
  double x_tolerance = 1e-8;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

/// Downhill simplex minimization with standard coefficients (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2). The objective may return +inf
/// for infeasible points. Fully deterministic for a deterministic objective.
template <typename F>
NelderMeadResult nelder_mead(F&& objective, const Eigen::VectorXd& start,
                             const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = start.size();
  NelderMeadResult result;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> values;
  simplex.push_back(start);
  values.push_back(eval(start));
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd v = start;
    v[k] += opt.initial_step;
    simplex.push_back(v);
    values.push_back(eval(v));
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n) + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s;
    std::vector<double> v;
    for (std::size_t i : order) {
      s.push_back(simplex[i]);
      v.push_back(values[i]);
    }
    simplex = std::move(s);
    values = std::move(v);
  };

  const std::size_t worst = static_cast<std::size_t>(n);
  for (; result.iterations < opt.max_iters; ++result.iterations) {
    sort_simplex();
    if (std::isfinite(values[worst])) {
      double diameter = 0.0;
      for (std::size_t i = 1; i <= worst; ++i) {
        diameter = std::max(diameter, (simplex[i] - simplex[0]).lpNorm<Eigen::Infinity>());
      }
      if (values[worst] - values[0] <= opt.f_tolerance * (1.0 + std::abs(values[0])) &&
          diameter <= opt.x_tolerance) {
        break;
      }
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < worst; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < values[0]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[worst - 1]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    // Contraction, outside if the reflection improved on the worst point.
    const bool outside = f_reflected < values[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 1; i <= worst; ++i) {
      simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
      values[i] = eval(simplex[i]);
    }
  }
  sort_simplex();
  result.x = simplex[0];
  result.value = values[0];
  return result;
}

}  // namespace distgp
