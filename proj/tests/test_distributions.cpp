#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "distgp/distributions.hpp"

namespace distgp {
namespace {

Eigen::MatrixXd column(std::initializer_list<double> values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

TEST(Validate, AcceptsUniformPair) {
  InputDistribution d = DiracMixture(vec({0.5, 0.5}), column({0, 1}));
  EXPECT_NO_THROW(validate(d));
}

TEST(Validate, RejectsWeightsNotSummingToOne) {
  EXPECT_THROW(DiracMixture(vec({0.5, 0.4}), column({0, 1})), WeightError);
}

TEST(Validate, RejectsNonPositiveOrOversizedWeights) {
  EXPECT_THROW(DiracMixture(vec({1.5, -0.5}), column({0, 1})), WeightError);
  EXPECT_THROW(DiracMixture(vec({1.0, 0.0}), column({0, 1})), WeightError);
}

TEST(Validate, RenormalizesWithinTolerance) {
  const DiracMixture d(vec({0.5 + 4e-10, 0.5}), column({0, 1}));
  EXPECT_DOUBLE_EQ(d.weights().sum(), 1.0);
}

TEST(Validate, RejectsNegativeVariance) {
  EXPECT_THROW(Gaussian(vec({0}), Eigen::MatrixXd::Constant(1, 1, -1.0)), CovarianceError);
}

TEST(Validate, RejectsZeroVarianceAndAsymmetry) {
  EXPECT_THROW(Gaussian::univariate(5.0, 0.0), CovarianceError);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.1, 0.2, 1.0;
  EXPECT_THROW(Gaussian(vec({0, 0}), cov), CovarianceError);
}

TEST(Validate, RejectsRaggedDimensions) {
  EXPECT_THROW(DiracMixture(vec({0.5, 0.3, 0.2}), column({0, 1})), DimensionError);
  EXPECT_THROW(Gaussian(vec({0, 0}), Eigen::MatrixXd::Identity(3, 3)), DimensionError);
  EXPECT_THROW(DiracMixture::uniform(Eigen::MatrixXd(0, 1)), DimensionError);
}

TEST(Validate, AcceptsRandomValidCorpus) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> count(1, 12), dim(1, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng);
    if (trial % 2 == 0) {
      Eigen::MatrixXd a(n, n);
      for (int i = 0; i < n * n; ++i) a.data()[i] = u(rng);
      Eigen::MatrixXd cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
      cov = 0.5 * (cov + cov.transpose());
      Eigen::VectorXd mean(n);
      for (int i = 0; i < n; ++i) mean[i] = u(rng);
      InputDistribution d = Gaussian(mean, cov);
      ASSERT_NO_THROW(validate(d));
    } else {
      const int m = count(rng);
      Eigen::VectorXd w(m);
      for (int i = 0; i < m; ++i) w[i] = 0.05 + std::abs(u(rng));
      w /= w.sum();
      Eigen::MatrixXd pts(m, n);
      for (int i = 0; i < m * n; ++i) pts.data()[i] = u(rng);
      InputDistribution d = DiracMixture(w, pts);
      ASSERT_NO_THROW(validate(d));
    }
  }
}

TEST(DeterministicSample, SinglePointIsMedian) {
  const DiracMixture d = deterministic_sample(Gaussian::univariate(0.0, 1.0), 1);
  ASSERT_EQ(d.size(), 1);
  EXPECT_DOUBLE_EQ(d.weights()[0], 1.0);
  EXPECT_NEAR(d.points()(0, 0), 0.0, 1e-12);
}

TEST(DeterministicSample, PairIsSymmetric) {
  const DiracMixture d = deterministic_sample(Gaussian::univariate(0.0, 1.0), 2);
  EXPECT_NEAR(d.points()(0, 0), -d.points()(1, 0), 1e-12);
  EXPECT_LT(d.points()(0, 0), 0.0);
}

TEST(DeterministicSample, ThreePointsMatchQuantiles) {
  // 2 + 2 * Phi^{-1}(1/6), 2, 2 + 2 * Phi^{-1}(5/6), quantiles from scipy.
  const DiracMixture d = deterministic_sample(Gaussian::univariate(2.0, 4.0), 3);
  EXPECT_NEAR(d.points()(0, 0), 0.065156867796597906, 1e-10);
  EXPECT_NEAR(d.points()(1, 0), 2.0, 1e-12);
  EXPECT_NEAR(d.points()(2, 0), 3.9348431322034019, 1e-10);
}

TEST(DeterministicSample, QuantileBisectionMatchesCdf) {
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999}) {
    EXPECT_NEAR(standard_normal_cdf(standard_normal_quantile(p)), p, 1e-12);
  }
}

TEST(DeterministicSample, StrictlyIncreasingAndLowBias) {
  for (Eigen::Index m : {10, 50, 100}) {
    const Gaussian g = Gaussian::univariate(-1.5, 2.25);
    const DiracMixture d = deterministic_sample(g, m);
    for (Eigen::Index i = 1; i < m; ++i) EXPECT_LT(d.points()(i - 1, 0), d.points()(i, 0));
    const auto mom = moments(d);
    EXPECT_LE(std::abs(mom.mean[0] - (-1.5)), 1.5 * 0.05);
  }
}

TEST(DeterministicSample, RejectsMultivariate) {
  EXPECT_THROW(deterministic_sample(Gaussian(vec({0, 0}), Eigen::MatrixXd::Identity(2, 2)), 4),
               DimensionError);
}

TEST(RandomSample, ReproducibleUnderSeed) {
  const Gaussian g(vec({1, -1}), Eigen::MatrixXd::Identity(2, 2) * 0.5);
  const DiracMixture a = random_sample(g, 25, 42);
  const DiracMixture b = random_sample(g, 25, 42);
  EXPECT_TRUE((a.points().array() == b.points().array()).all());
  const DiracMixture c = random_sample(g, 25, 43);
  EXPECT_FALSE((a.points().array() == c.points().array()).all());
}

TEST(RandomSample, LargeSampleMean) {
  const DiracMixture d = random_sample(Gaussian::univariate(0.0, 1.0), 100000, 7);
  EXPECT_LT(std::abs(moments(d).mean[0]), 0.02);
}

TEST(Moments, SymmetricPair) {
  const auto m = moments(DiracMixture(vec({0.5, 0.5}), column({-1, 1})));
  EXPECT_DOUBLE_EQ(m.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(m.covariance(0, 0), 1.0);
}

TEST(Moments, GaussianIdentity) {
  const auto m = moments(Gaussian::univariate(3.0, 4.0));
  EXPECT_EQ(m.mean[0], 3.0);
  EXPECT_EQ(m.covariance(0, 0), 4.0);
}

TEST(Moments, FourPointUniform) {
  const auto m = moments(DiracMixture::uniform(column({0, 1, 2, 3})));
  EXPECT_DOUBLE_EQ(m.mean[0], 1.5);
  EXPECT_DOUBLE_EQ(m.covariance(0, 0), 1.25);
}

TEST(Moments, DiracCovarianceIsPsd) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + trial % 7;
    Eigen::MatrixXd pts(m, 3);
    for (int i = 0; i < m * 3; ++i) pts.data()[i] = z(rng);
    const auto mom = moments(DiracMixture::uniform(pts));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mom.covariance);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

}  // namespace
}  // namespace distgp
