#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "distgp/distances.hpp"
#include "distgp/distributions.hpp"
#include "distgp/errors.hpp"

namespace distgp {

enum class KernelFamily {
  constant,
  squared_exponential,
  matern,
  exponential,
  gamma_exponential,
  rational_quadratic,
  nonstationary_linear_se,
};

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::constant: return "constant";
    case KernelFamily::squared_exponential: return "se";
    case KernelFamily::matern: return "matern";
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::gamma_exponential: return "gamma_exponential";
    case KernelFamily::rational_quadratic: return "rational_quadratic";
    case KernelFamily::nonstationary_linear_se: return "nonstationary_linear_se";
  }
  return "unknown";
}

inline KernelFamily kernel_family_from_string(std::string_view s) {
  for (auto f : {KernelFamily::constant, KernelFamily::squared_exponential, KernelFamily::matern,
                 KernelFamily::exponential, KernelFamily::gamma_exponential,
                 KernelFamily::rational_quadratic, KernelFamily::nonstationary_linear_se}) {
    if (to_string(f) == s) return f;
  }
  throw ParameterError("unknown kernel family '" + std::string(s) + "'");
}

/// Covariance function over a distance between inputs. Only the fields of the
/// active family are read.
struct KernelSpec {
  KernelFamily family = KernelFamily::squared_exponential;
  double signal_std = 1.0;   // alpha; the kernel is scaled by alpha^2
  double lengthscale = 1.0;
  double matern_nu = 1.5;    // one of 1/2, 3/2, 5/2
  double gamma = 1.0;        // gamma-exponential shape, (0, 2]
  double rq_alpha = 1.0;     // rational-quadratic shape
  double sigma0_sq = 1.0;    // constant family value
  Eigen::MatrixXd sigma_d;   // non-stationary linear weight matrix

  bool stationary() const { return family != KernelFamily::nonstationary_linear_se; }

  void check() const;
};

namespace detail {

inline bool near(double a, double b) { return std::abs(a - b) < 1e-12; }

}  // namespace detail

inline void KernelSpec::check() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError(std::string(what) + " must be positive and finite");
    }
  };
  switch (family) {
    case KernelFamily::constant:
      if (!(sigma0_sq >= 0.0) || !std::isfinite(sigma0_sq)) {
        throw ParameterError("sigma0_sq must be non-negative");
      }
      return;
    case KernelFamily::nonstationary_linear_se: {
      positive(lengthscale, "lengthscale");
      if (sigma_d.rows() == 0 || sigma_d.rows() != sigma_d.cols()) {
        throw DimensionError("sigma_d must be a non-empty square matrix");
      }
      if (!sigma_d.isApprox(sigma_d.transpose(), 1e-12)) {
        throw ParameterError("sigma_d must be symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_d, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < -1e-12) {
        throw ParameterError("sigma_d must be positive semidefinite");
      }
      return;
    }
    case KernelFamily::matern:
      if (!detail::near(matern_nu, 0.5) && !detail::near(matern_nu, 1.5) &&
          !detail::near(matern_nu, 2.5)) {
        throw ParameterError("Matern nu must be 1/2, 3/2 or 5/2");
      }
      break;
    case KernelFamily::gamma_exponential:
      if (!(gamma > 0.0 && gamma <= 2.0)) throw ParameterError("gamma must lie in (0, 2]");
      break;
    case KernelFamily::rational_quadratic:
      positive(rq_alpha, "rq_alpha");
      break;
    default:
      break;
  }
  positive(signal_std, "signal_std");
  positive(lengthscale, "lengthscale");
}

/// Stationary covariance alpha^2 * base(delta).
inline double kernel_eval(const KernelSpec& spec, double delta) {
  if (!(delta >= 0.0)) throw ParameterError("distance must be non-negative");
  if (!spec.stationary()) {
    throw ParameterError("kernel_eval needs a stationary family; use nonstationary_eval");
  }
  const double a2 = spec.signal_std * spec.signal_std;
  const double r = delta / spec.lengthscale;
  switch (spec.family) {
    case KernelFamily::constant:
      return spec.sigma0_sq;
    case KernelFamily::squared_exponential:
      return a2 * std::exp(-0.5 * r * r);
    case KernelFamily::exponential:
      return a2 * std::exp(-r);
    case KernelFamily::matern: {
      if (detail::near(spec.matern_nu, 0.5)) return a2 * std::exp(-r);
      if (detail::near(spec.matern_nu, 1.5)) {
        const double s = std::sqrt(3.0) * r;
        return a2 * (1.0 + s) * std::exp(-s);
      }
      if (detail::near(spec.matern_nu, 2.5)) {
        const double s = std::sqrt(5.0) * r;
        return a2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
      }
      throw ParameterError("Matern nu must be 1/2, 3/2 or 5/2");
    }
    case KernelFamily::gamma_exponential:
      if (!(spec.gamma > 0.0 && spec.gamma <= 2.0)) {
        throw ParameterError("gamma must lie in (0, 2]");
      }
      return a2 * std::exp(-std::pow(r, spec.gamma));
    case KernelFamily::rational_quadratic:
      return a2 * std::pow(1.0 + r * r / (2.0 * spec.rq_alpha), -spec.rq_alpha);
    case KernelFamily::nonstationary_linear_se:
      break;
  }
  throw InternalError("unhandled kernel family");
}

/// (mean_i^T Sigma_d mean_j) * exp(-delta^2 / (2 l^2)).
inline double nonstationary_eval(const KernelSpec& spec, const Eigen::VectorXd& mean_i,
                                 const Eigen::VectorXd& mean_j, double delta) {
  if (!(delta >= 0.0)) throw ParameterError("distance must be non-negative");
  const Eigen::Index n = spec.sigma_d.rows();
  if (mean_i.size() != n || mean_j.size() != n || spec.sigma_d.cols() != n) {
    throw DimensionError("mean vectors must match sigma_d (" + std::to_string(n) + ")");
  }
  const double r = delta / spec.lengthscale;
  return mean_i.dot(spec.sigma_d * mean_j) * std::exp(-0.5 * r * r);
}

/// Expected SE kernel between two Gaussians in closed form:
///   alpha^2 det(I + (Si + Sj)/l^2)^(-1/2)
///     * exp(-1/2 (mi - mj)^T (Si + Sj + l^2 I)^(-1) (mi - mj)).
inline double mean_kernel_se_gaussian(const Gaussian& gi, const Gaussian& gj, double alpha,
                                      double lengthscale) {
  if (gi.dimension() != gj.dimension()) throw DimensionError("input dimensions differ");
  const double l2 = lengthscale * lengthscale;
  const double a2 = alpha * alpha;
  if (gi.dimension() == 1) {
    const double s = gi.covariance()(0, 0) + gj.covariance()(0, 0);
    const double dm = gi.mean()[0] - gj.mean()[0];
    return a2 / std::sqrt(1.0 + s / l2) * std::exp(-0.5 * dm * dm / (s + l2));
  }
  const Eigen::Index n = gi.dimension();
  const Eigen::MatrixXd s = gi.covariance() + gj.covariance();
  const Eigen::VectorXd dm = gi.mean() - gj.mean();
  Eigen::LLT<Eigen::MatrixXd> llt(s + l2 * Eigen::MatrixXd::Identity(n, n));
  if (llt.info() != Eigen::Success) throw InternalError("mean kernel system is singular");
  // det(I + S/l^2) = det(S + l^2 I) / l^(2n)
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum() -
                         static_cast<double>(n) * std::log(l2);
  const double quad = dm.dot(llt.solve(dm));
  return a2 * std::exp(-0.5 * log_det - 0.5 * quad);
}

/// Gram matrix of a distance matrix plus noise_var on the diagonal. The
/// non-stationary family needs one mean vector per input.
inline Eigen::MatrixXd gram_matrix(const DistanceMatrix& dm, const KernelSpec& spec,
                                   double noise_var,
                                   const std::vector<Eigen::VectorXd>* means = nullptr) {
  spec.check();
  if (!(noise_var >= 0.0)) throw ParameterError("noise variance must be non-negative");
  const Eigen::Index n = dm.size();
  if (!spec.stationary()) {
    if (means == nullptr || static_cast<Eigen::Index>(means->size()) != n) {
      throw DimensionError("non-stationary kernel needs one mean per input");
    }
  }
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v =
          spec.stationary()
              ? kernel_eval(spec, dm(i, j))
              : nonstationary_eval(spec, (*means)[static_cast<std::size_t>(i)],
                                   (*means)[static_cast<std::size_t>(j)], dm(i, j));
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += noise_var;
  }
  return k;
}

}  // namespace distgp
