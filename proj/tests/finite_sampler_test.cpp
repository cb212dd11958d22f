#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "dppm/data.hpp"
#include "dppm/evaluation.hpp"
#include "dppm/finite_sampler.hpp"

using namespace dppm;

namespace {

Eigen::MatrixXd two_blobs(int n_each, RngHandle& rng) {
  Eigen::MatrixXd x(2 * n_each, 2);
  for (int i = 0; i < 2 * n_each; ++i) {
    const double c = i < n_each ? -4.0 : 4.0;
    x.row(i) << c + 0.5 * rng.standard_normal(), c + 0.5 * rng.standard_normal();
  }
  return x;
}

}  // namespace

TEST(FiniteSamplerTest, ClassProbabilitiesAreASoftmax) {
  RngHandle rng(31);
  const Eigen::MatrixXd x = two_blobs(20, rng);
  const Hyperparams h = Hyperparams::from_data(x);
  FiniteState s;
  s.params = sample_prior(ModelFamily::GeneralEqual, h, 3, rng);
  s.pi = {0.2, 0.3, 0.5};
  for (int i = 0; i < x.rows(); ++i) {
    const auto p = class_probabilities(x.row(i).transpose(), ModelFamily::GeneralEqual, s);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  }
  // Identical components: the probabilities are the proportions.
  s.params.components[1] = s.params.components[0];
  s.params.components[2] = s.params.components[0];
  const auto p = class_probabilities(x.row(0).transpose(), ModelFamily::GeneralEqual, s);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[k], s.pi[k], 1e-12);
}

TEST(FiniteSamplerTest, SingleComponentIsConjugateSampling) {
  RngHandle rng(32);
  Eigen::MatrixXd x(50, 2);
  for (int i = 0; i < 50; ++i) x.row(i) << 1.0 + rng.standard_normal(), -2.0 + rng.standard_normal();
  const Hyperparams h = Hyperparams::from_data(x);
  FiniteOptions opt;
  opt.n_samples = 4100;
  const auto chain = run_finite_gibbs(x, ModelFamily::GeneralFull, 1, h, opt, rng);
  ASSERT_EQ(chain.samples.size(), 4000u);
  EXPECT_EQ(chain.K_mode, 1);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (const auto& s : chain.samples) {
    ASSERT_EQ(s.weights, std::vector<double>{1.0});
    for (int z : s.z) ASSERT_EQ(z, 0);
    mean += s.params.components[0].mean / chain.samples.size();
  }
  const std::vector<int> z(50, 0);
  const Eigen::VectorXd mu_n = posterior_mean(cluster_stats(x, z, 1)[0], h);
  EXPECT_NEAR(mean(0), mu_n(0), 0.03);
  EXPECT_NEAR(mean(1), mu_n(1), 0.03);
}

TEST(FiniteSamplerTest, ProportionsFollowDirichletUpdate) {
  RngHandle rng(33);
  const Eigen::MatrixXd x = two_blobs(30, rng);
  Eigen::MatrixXd y(80, 2);
  y << x, x.bottomRows(20);  // 30 points in one blob, 50 in the other
  const Hyperparams h = Hyperparams::from_data(y);
  FiniteOptions opt;
  opt.n_samples = 6000;
  opt.burn_in = 200;
  const auto chain = run_finite_gibbs(y, ModelFamily::SphericalFree, 2, h, opt, rng);
  double small = 0.0, sq = 0.0;
  for (const auto& s : chain.samples) {
    ASSERT_NEAR(s.weights[0] + s.weights[1], 1.0, 1e-12);
    const double w = std::min(s.weights[0], s.weights[1]);
    small += w / chain.samples.size();
    sq += w * w / chain.samples.size();
  }
  // Labels are fixed by the separation, so pi ~ Beta(0.5 + 30, 0.5 + 50).
  const double a = 30.5, b = 50.5;
  EXPECT_NEAR(small, a / (a + b), 0.005);
  EXPECT_NEAR(sq - small * small, a * b / ((a + b) * (a + b) * (a + b + 1)), 3e-4);
}

TEST(FiniteSamplerTest, RecoversSeparatedClustersAndKeepsEmptyOnes) {
  RngHandle rng(34);
  const Eigen::MatrixXd x = two_blobs(40, rng);
  std::vector<int> truth(80, 0);
  for (int i = 40; i < 80; ++i) truth[i] = 1;
  const Hyperparams h = Hyperparams::from_data(x);
  FiniteOptions opt;
  opt.n_samples = 600;
  auto chain = run_finite_gibbs(x, ModelFamily::GeneralEqual, 2, h, opt, rng);
  EXPECT_DOUBLE_EQ(misclassification_error(chain.map_partition, truth), 0.0);

  chain = run_finite_gibbs(x, ModelFamily::GeneralEqual, 4, h, opt, rng);
  for (const auto& s : chain.samples) {
    ASSERT_EQ(s.params.size(), 4);
    ASSERT_EQ(s.weights.size(), 4u);
  }
}

TEST(FiniteSamplerTest, ReproducibleAndValidated) {
  RngHandle data_rng(35);
  const Eigen::MatrixXd x = two_blobs(15, data_rng);
  const Hyperparams h = Hyperparams::from_data(x);
  FiniteOptions opt;
  opt.n_samples = 100;
  opt.burn_in = 10;
  RngHandle a(7), b(7);
  const auto c1 = run_finite_gibbs(x, ModelFamily::DiagonalFree, 2, h, opt, a);
  const auto c2 = run_finite_gibbs(x, ModelFamily::DiagonalFree, 2, h, opt, b);
  ASSERT_EQ(c1.samples.size(), c2.samples.size());
  for (std::size_t t = 0; t < c1.samples.size(); ++t) EXPECT_EQ(c1.samples[t].weights, c2.samples[t].weights);

  EXPECT_THROW(run_finite_gibbs(x, ModelFamily::DiagonalFree, 0, h, opt, a), std::invalid_argument);
  opt.dirichlet_conc = 0.0;
  EXPECT_THROW(run_finite_gibbs(x, ModelFamily::DiagonalFree, 2, h, opt, a), std::invalid_argument);
}
