#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "dppm/data.hpp"
#include "dppm/dpm_sampler.hpp"
#include "dppm/finite_sampler.hpp"
#include "dppm/model_selection.hpp"
#include "oracles.hpp"

using namespace dppm;

namespace {

oracle::Prior as_oracle(const Hyperparams& h) { return {h.mu0, h.kappa_n, h.nu0, h.Lambda0, h.s0_sq}; }

std::vector<int> all_rows(int n) {
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

double laplace_k1(const Eigen::MatrixXd& x, ModelFamily model, const Hyperparams& h, int samples, std::uint64_t seed) {
  RngHandle rng(seed);
  FiniteOptions opt;
  opt.n_samples = samples + 100;
  const auto chain = run_finite_gibbs(x, model, 1, h, opt, rng);
  return laplace_marginal_loglik(chain, model, h, x).log_ml;
}

ChainSample permuted(const ChainSample& s, const std::vector<int>& perm) {
  ChainSample out = s;
  for (int k = 0; k < s.K; ++k) out.params.components[perm[k]] = s.params.components[k];
  for (int& z : out.z) z = perm[z];
  if (!s.weights.empty())
    for (int k = 0; k < s.K; ++k) out.weights[perm[k]] = s.weights[k];
  return out;
}

}  // namespace

TEST(LaplaceTest, MatchesConjugateEvidenceInOneDimension) {
  RngHandle rng(41);
  Eigen::MatrixXd x(200, 1);
  for (int i = 0; i < 200; ++i) x(i, 0) = 3.0 + 2.0 * rng.standard_normal();
  const Hyperparams h = Hyperparams::from_data(x);
  const double exact = oracle::niw_log_evidence(x, all_rows(200), as_oracle(h));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double est = laplace_k1(x, ModelFamily::GeneralFull, h, 2000, seed);
    EXPECT_LT(std::abs(est - exact) / std::abs(exact), 0.02);
    EXPECT_NEAR(est, exact, 0.3);
  }
}

TEST(LaplaceTest, MatchesConjugateEvidenceInTwoDimensions) {
  RngHandle rng(42);
  const auto data = simulate_bensmail(200, rng);
  const Eigen::MatrixXd& x = data.values;
  const Hyperparams h = Hyperparams::from_data(x);
  const auto rows = all_rows(200);
  const double niw = oracle::niw_log_evidence(x, rows, as_oracle(h));
  const double sph = oracle::spherical_log_evidence(x, rows, as_oracle(h));
  EXPECT_NEAR(laplace_k1(x, ModelFamily::GeneralFull, h, 5000, 1), niw, 0.3);
  EXPECT_NEAR(laplace_k1(x, ModelFamily::GeneralEqual, h, 5000, 2), niw, 0.3);
  EXPECT_NEAR(laplace_k1(x, ModelFamily::SphericalEqual, h, 5000, 3), sph, 0.3);
  EXPECT_NEAR(laplace_k1(x, ModelFamily::SphericalFree, h, 5000, 4), sph, 0.3);
}

TEST(LaplaceTest, ReportsCountsAndRejectsShortChains) {
  RngHandle rng(43);
  const auto data = simulate_bensmail(60, rng);
  const Hyperparams h = Hyperparams::from_data(data.values);
  FiniteOptions opt;
  opt.n_samples = 4;
  opt.burn_in = 1;
  auto chain = run_finite_gibbs(data.values, ModelFamily::SphericalEqual, 2, h, opt, rng);
  try {
    laplace_marginal_loglik(chain, ModelFamily::SphericalEqual, h, data.values);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("longer chain"), std::string::npos);
  }
  opt.n_samples = 400;
  opt.burn_in = 100;
  chain = run_finite_gibbs(data.values, ModelFamily::SphericalEqual, 2, h, opt, rng);
  const auto est = laplace_marginal_loglik(chain, ModelFamily::SphericalEqual, h, data.values);
  EXPECT_EQ(est.K, 2);
  EXPECT_EQ(est.nu_m, 6);
  EXPECT_EQ(est.dimension, 6);
  EXPECT_EQ(est.theta_hat.size(), 6);
  EXPECT_EQ(est.n_samples, 300);
  EXPECT_TRUE(std::isfinite(est.log_ml));
}

TEST(LaplaceTest, InvariantUnderCommonRelabeling) {
  RngHandle rng(44);
  const auto data = simulate_bensmail(120, rng);
  const Hyperparams h = Hyperparams::from_data(data.values);
  FiniteOptions opt;
  opt.n_samples = 500;
  for (auto model : {ModelFamily::SphericalFree, ModelFamily::GeneralFull, ModelFamily::GeneralOrientFree}) {
    const auto chain = run_finite_gibbs(data.values, model, 3, h, opt, rng);
    ChainResult swapped = chain;
    for (auto& s : swapped.samples) s = permuted(s, {2, 0, 1});
    const double a = laplace_marginal_loglik(chain, model, h, data.values).log_ml;
    const double b = laplace_marginal_loglik(swapped, model, h, data.values).log_ml;
    EXPECT_NEAR(a, b, 1e-6) << model_code(model);
  }
}

TEST(VectorizeTest, LengthsAndBlocks) {
  RngHandle rng(45);
  Hyperparams h;
  h.mu0 = Eigen::Vector2d::Zero();
  h.Lambda0 = Eigen::Matrix2d::Identity();
  ChainSample s;
  s.params = sample_prior(ModelFamily::SphericalEqual, h, 2, rng);
  s.K = 2;
  s.z = {0, 0, 1, 1, 1};
  EXPECT_EQ(vectorize(ModelFamily::SphericalEqual, s).size(), 6);

  s.params = sample_prior(ModelFamily::GeneralFull, h, 1, rng);
  s.K = 1;
  s.z = {0, 0, 0};
  const Eigen::VectorXd v = vectorize(ModelFamily::GeneralFull, s);
  EXPECT_EQ(v.size(), 5);
  EXPECT_TRUE(v.head(2).isApprox(s.params.components[0].mean));

  // Covariance coordinates per model for K = 3, d = 2: volumes, shape
  // entries, rotation angles and Cholesky entries.
  const std::vector<int> cov_coords{1, 3, 2, 3 + 2, 3, 2 + 3, 2 + 3, 3 + 2 + 3, 9};
  for (std::size_t i = 0; i < kAllModels.size(); ++i) {
    const auto m = kAllModels[i];
    ChainSample t;
    t.params = sample_prior(m, h, 3, rng);
    t.K = 3;
    t.z = {0, 1, 2, 2};
    EXPECT_EQ(vectorize(m, t).size(), 2 + 6 + cov_coords[i]) << model_code(m);
  }
}

TEST(VectorizeTest, PermutedLabelsGivePermutedBlocks) {
  RngHandle rng(46);
  Hyperparams h;
  h.mu0 = Eigen::Vector2d::Zero();
  h.Lambda0 = Eigen::Matrix2d::Identity();
  ChainSample s;
  s.params = sample_prior(ModelFamily::SphericalFree, h, 3, rng);
  s.K = 3;
  s.z = {0, 1, 1, 2, 2, 2};
  const auto p = permuted(s, {1, 2, 0});
  const Eigen::VectorXd a = vectorize(ModelFamily::SphericalFree, s), b = vectorize(ModelFamily::SphericalFree, p);
  // Means occupy entries 2..7, log volumes 8..10.
  for (int k = 0; k < 3; ++k) {
    const int j = (k + 1) % 3;
    EXPECT_TRUE(a.segment(2 + 2 * k, 2).isApprox(b.segment(2 + 2 * j, 2)));
    EXPECT_DOUBLE_EQ(a(8 + k), b(8 + j));
  }
  const ChainSample back = align_labels(p, s);
  EXPECT_TRUE(vectorize(ModelFamily::SphericalFree, back).isApprox(a));
  EXPECT_EQ(back.z, s.z);
}

TEST(VectorizeTest, JacobianOfLogVolume) {
  Hyperparams h;
  ChainSample s;
  Component c;
  c.mean = Eigen::Vector2d::Zero();
  s.params.components = {c};
  s.params.shared.volume = 2.5;
  s.K = 1;
  s.z = {0};
  const auto coords = vectorize_parameters(ModelFamily::SphericalEqual, s);
  EXPECT_NEAR(coords.values(2), std::log(2.5), 1e-15);
  EXPECT_NEAR(coords.log_jacobian, std::log(2.5), 1e-15);
}

TEST(BayesFactorTest, EvidenceScaleGrid) {
  const std::vector<std::pair<double, Evidence>> grid{
      {-1, Evidence::Negative},   {0, Evidence::NotBad},    {1, Evidence::NotBad},
      {2, Evidence::Substantial}, {3, Evidence::Substantial}, {5, Evidence::Strong},
      {7, Evidence::Strong},      {10, Evidence::Decisive}, {11, Evidence::Decisive},
      {36.08, Evidence::Decisive}, {199.58, Evidence::Decisive}};
  for (const auto& [v, e] : grid) EXPECT_EQ(evidence_category(v), e) << v;
  EXPECT_EQ(evidence_name(Evidence::NotBad), "NotBad");
}

TEST(BayesFactorTest, ReportAndAntisymmetry) {
  const auto eq = bayes_factor(-100.0, -100.0);
  EXPECT_DOUBLE_EQ(eq.bf, 1.0);
  EXPECT_DOUBLE_EQ(eq.two_log_bf, 0.0);
  EXPECT_EQ(eq.evidence, Evidence::NotBad);
  const auto geyser = bayes_factor(-418.99, -421.49);
  EXPECT_NEAR(geyser.two_log_bf, 5.0, 1e-9);
  EXPECT_EQ(geyser.evidence, Evidence::Strong);
  EXPECT_NEAR(bayes_factor(0.0, -18.04).two_log_bf, 36.08, 1e-9);
  EXPECT_EQ(bayes_factor(0.0, -18.04).evidence, Evidence::Decisive);
  RngHandle rng(47);
  for (int t = 0; t < 100; ++t) {
    const double a = -500 * rng.uniform(), b = -500 * rng.uniform();
    EXPECT_DOUBLE_EQ(bayes_factor(a, b).two_log_bf, -bayes_factor(b, a).two_log_bf);
    EXPECT_NEAR(bayes_factor(a, b).bf * bayes_factor(b, a).bf, 1.0, 1e-9);
  }
  EXPECT_THROW(bayes_factor(std::nan(""), 0.0), std::invalid_argument);
}

TEST(SelectModelTest, Examples) {
  auto sel = select_model({{ModelFamily::SphericalFree, 2, -589.59, 2}});
  EXPECT_EQ(sel.best.model, ModelFamily::SphericalFree);
  EXPECT_FALSE(sel.versus_runner_up.has_value());

  sel = select_model({{ModelFamily::DiagonalEqual, 2, -589.74, 2}, {ModelFamily::SphericalFree, 2, -589.59, 2}});
  EXPECT_EQ(sel.best.model, ModelFamily::SphericalFree);
  ASSERT_EQ(sel.ranking.size(), 2u);
  EXPECT_EQ(sel.ranking[1].model, ModelFamily::DiagonalEqual);
  ASSERT_TRUE(sel.versus_runner_up.has_value());
  EXPECT_NEAR(sel.versus_runner_up->two_log_bf, 0.30, 1e-9);

  sel = select_model({{ModelFamily::GeneralFull, 2, -300.0, 2}, {ModelFamily::SphericalEqual, 2, -300.0, 2}});
  EXPECT_EQ(sel.best.model, ModelFamily::SphericalEqual);
  EXPECT_THROW(select_model({}), std::invalid_argument);
}
