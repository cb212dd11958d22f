#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "dppm/data.hpp"
#include "dppm/dpm_sampler.hpp"
#include "oracles.hpp"

using namespace dppm;

namespace {

Hyperparams hyper_1d() {
  Hyperparams h;
  h.mu0 = Eigen::VectorXd::Zero(1);
  h.kappa_n = 0.5;
  h.nu0 = 3.0;
  h.Lambda0 = Eigen::MatrixXd::Identity(1, 1);
  h.s0_sq = 1.0;
  return h;
}

oracle::Prior as_oracle(const Hyperparams& h) { return {h.mu0, h.kappa_n, h.nu0, h.Lambda0, h.s0_sq}; }

// Partition probabilities under the CRP prior times the marginal likelihood.
std::map<std::vector<int>, double> exact_partition_posterior(const Eigen::MatrixXd& x, ModelFamily model,
                                                            const Hyperparams& h, double alpha) {
  const auto p = as_oracle(h);
  const int n = static_cast<int>(x.rows());
  std::map<std::vector<int>, double> logp;
  for (const auto& z : oracle::set_partitions(n)) {
    const auto sizes = oracle::block_sizes(z);
    double lp = oracle::ewens_log_prob(sizes, alpha);
    if (model == ModelFamily::SphericalEqual) {
      lp += oracle::shared_spherical_log_evidence(x, z, p);
    } else {
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        std::vector<int> rows;
        for (int i = 0; i < n; ++i)
          if (z[i] == static_cast<int>(k)) rows.push_back(i);
        lp += model == ModelFamily::SphericalFree ? oracle::spherical_log_evidence(x, rows, p)
                                                  : oracle::niw_log_evidence(x, rows, p);
      }
    }
    logp[z] = lp;
  }
  double mx = -1e300;
  for (auto& [z, v] : logp) mx = std::max(mx, v);
  double total = 0.0;
  for (auto& [z, v] : logp) total += std::exp(v - mx);
  for (auto& [z, v] : logp) v = std::exp(v - mx) / total;
  return logp;
}

}  // namespace

TEST(CrpPredictiveTest, Examples) {
  const std::vector<int> none;
  EXPECT_EQ(crp_predictive(none, 1.0), std::vector<double>{1.0});
  const std::vector<int> c21{2, 1};
  const auto p = crp_predictive(c21, 1.0);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.25);
  EXPECT_DOUBLE_EQ(p[2], 0.25);
  const std::vector<int> c1{1};
  const auto q = crp_predictive(c1, 2.0);
  EXPECT_DOUBLE_EQ(q[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(q[1], 2.0 / 3.0);
  const std::vector<int> bad{2, -1};
  EXPECT_THROW(crp_predictive(bad, 1.0), std::invalid_argument);
  EXPECT_THROW(crp_predictive(c1, 0.0), std::invalid_argument);
}

TEST(CrpPredictiveTest, SumsToOne) {
  RngHandle rng(11);
  for (int t = 0; t < 1000; ++t) {
    const int K = static_cast<int>(rng.uniform() * 10);
    std::vector<int> counts(K);
    for (int& c : counts) c = 1 + static_cast<int>(rng.uniform() * 50);
    const double alpha = std::exp(4 * rng.uniform() - 2);
    const auto p = crp_predictive(counts, alpha);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(CrpPredictiveTest, SequentialProductIsExchangeable) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (int n = 1; n <= 6; ++n) {
      std::vector<int> order(n);
      for (const auto& z : oracle::set_partitions(n)) {
        const double expect = oracle::ewens_log_prob(oracle::block_sizes(z), alpha);
        EXPECT_NEAR(crp_log_prior(oracle::block_sizes(z), alpha), expect, 1e-12);
        std::iota(order.begin(), order.end(), 0);
        do {
          // Seat customers in this order; clusters are numbered by first arrival.
          std::map<int, int> seat;
          std::vector<int> counts;
          double lp = 0.0;
          for (int i : order) {
            const auto probs = crp_predictive(counts, alpha);
            auto it = seat.find(z[i]);
            if (it == seat.end()) {
              lp += std::log(probs.back());
              seat[z[i]] = static_cast<int>(counts.size());
              counts.push_back(1);
            } else {
              lp += std::log(probs[it->second]);
              ++counts[it->second];
            }
          }
          ASSERT_NEAR(lp, expect, 1e-12);
        } while (std::next_permutation(order.begin(), order.end()));
      }
    }
  }
}

TEST(AlphaSamplerTest, MixtureWeight) {
  const double w = alpha_mixture_weight(1, 1, 2, 100, 0.5);
  EXPECT_NEAR(w, 2.0 / (2.0 + 100.0 * (1.0 + std::log(2.0))), 1e-15);
  EXPECT_NEAR(w, 0.011679, 1e-5);
  // K = 1, a = 1: odds 1 / (n (b - log eta)) against the Gamma(1, .) term.
  EXPECT_NEAR(alpha_mixture_weight(1, 1, 1, 50, 0.3), 1.0 / (1.0 + 50.0 * (1.0 - std::log(0.3))), 1e-15);
}

TEST(AlphaSamplerTest, StationaryLawIsConcentrationPosterior) {
  struct Case {
    double a, b;
    int K, n;
  };
  for (const auto& c : {Case{1, 1, 1, 1}, Case{2, 1, 3, 20}, Case{1, 0.5, 5, 100}}) {
    RngHandle rng(12);
    double alpha = 1.0;
    std::vector<double> draws;
    for (int t = 0; t < 100100; ++t) {
      alpha = sample_alpha(alpha, c.K, c.n, c.a, c.b, rng);
      if (t >= 100) draws.push_back(alpha);
    }
    const double ks = oracle::ks_statistic(draws, oracle::alpha_posterior_cdf(c.a, c.b, c.K, c.n));
    EXPECT_LT(ks, 0.02) << "a=" << c.a << " K=" << c.K << " n=" << c.n;
  }
}

TEST(ResampleLabelTest, SinglePointIsOneCluster) {
  RngHandle rng(13);
  const Hyperparams h = hyper_1d();
  Eigen::MatrixXd x(1, 1);
  x << 0.7;
  GibbsState s{{0}, sample_prior(ModelFamily::SphericalFree, h, 1, rng), 1.0};
  for (int t = 0; t < 100; ++t) {
    resample_label(0, s, x, ModelFamily::SphericalFree, h, rng);
    EXPECT_EQ(s.K(), 1);
    EXPECT_EQ(s.z[0], 0);
  }
}

TEST(ResampleLabelTest, TightClusterAbsorbsPointAsAlphaVanishes) {
  RngHandle rng(14);
  const Hyperparams h = hyper_1d();
  Eigen::MatrixXd x(3, 1);
  x << 2.0, 2.0, 2.0;
  GibbsState s;
  s.z = {0, 0, 1};
  s.params = sample_prior(ModelFamily::SphericalFree, h, 2, rng);
  s.params.components[0].mean(0) = 2.0;
  s.params.components[0].volume = 1e-4;
  s.params.components[1].mean(0) = -5.0;
  s.alpha = 1e-8;
  for (int t = 0; t < 200; ++t) {
    GibbsState trial = s;
    resample_label(2, trial, x, ModelFamily::SphericalFree, h, rng);
    EXPECT_EQ(trial.K(), 1);
    EXPECT_EQ(trial.z[2], 0);
  }
}

TEST(RunGibbsTest, PartitionPosteriorMatchesEnumeration) {
  Eigen::MatrixXd x(5, 1);
  x << -1.2, -0.9, 0.3, 1.8, 2.1;
  const Hyperparams h = hyper_1d();
  for (auto model : {ModelFamily::SphericalEqual, ModelFamily::SphericalFree, ModelFamily::GeneralFull}) {
    const auto exact = exact_partition_posterior(x, model, h, 1.0);
    RngHandle rng(15);
    GibbsOptions opt;
    opt.n_samples = 60100;
    opt.burn_in = 100;
    opt.fixed_alpha = 1.0;
    const auto chain = run_gibbs(x, model, h, opt, rng);
    std::map<std::vector<int>, double> freq;
    for (const auto& s : chain.samples) freq[oracle::canonical(s.z)] += 1.0 / chain.samples.size();
    double worst = 0.0;
    for (const auto& [z, p] : exact) worst = std::max(worst, std::abs(freq[z] - p));
    EXPECT_LT(worst, 0.012) << model_code(model);
  }
}

TEST(RunGibbsTest, PriorOnlyClusterCountMatchesCrp) {
  RngHandle rng(16);
  const int n = 50;
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) x.row(i) << rng.standard_normal(), rng.standard_normal();
  const Hyperparams h = Hyperparams::from_data(x);
  GibbsOptions opt;
  opt.n_samples = 20100;
  opt.burn_in = 100;
  opt.fixed_alpha = 1.0;
  opt.prior_only = true;
  const auto chain = run_gibbs(x, ModelFamily::SphericalEqual, h, opt, rng);

  double expect = 0.0;
  for (int i = 1; i <= n; ++i) expect += 1.0 / i;
  // Batch-means standard error.
  const auto ks = chain.K_trace();
  const int batches = 50, len = static_cast<int>(ks.size()) / batches;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b)
    for (int j = 0; j < len; ++j) means[b] += ks[b * len + j] / static_cast<double>(len);
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean) / (batches - 1);
  EXPECT_NEAR(mean, expect, 3 * std::sqrt(var / batches));
}

TEST(RunGibbsTest, DuplicatedPointGivesOneCluster) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(20, 2, 1.5);
  Hyperparams h;
  h.mu0 = Eigen::Vector2d::Zero();
  h.Lambda0 = Eigen::Matrix2d::Identity();
  for (auto model : kAllModels) {
    RngHandle rng(17);
    GibbsOptions opt;
    opt.n_samples = 300;
    opt.burn_in = 50;
    const auto chain = run_gibbs(x, model, h, opt, rng);
    EXPECT_EQ(chain.K_mode, 1) << model_code(model);
    EXPECT_EQ(chain.samples.size(), 250u);
  }
}

TEST(RunGibbsTest, StatesHaveNoEmptyClusters) {
  RngHandle rng(18);
  const auto data = simulate_bensmail(100, rng);
  const Hyperparams h = Hyperparams::from_data(data.values);
  for (auto model : kAllModels) {
    GibbsOptions opt;
    opt.n_samples = 200;
    opt.burn_in = 0;
    const auto chain = run_gibbs(data.values, model, h, opt, rng);
    for (const auto& s : chain.samples) {
      ASSERT_EQ(s.K, s.params.size());
      const auto counts = label_counts(s.z, s.K);
      for (int c : counts) ASSERT_GT(c, 0) << model_code(model);
      ASSERT_GT(s.alpha, 0.0);
    }
  }
}

TEST(RunGibbsTest, BensmailDesignFindsTwoClusters) {
  RngHandle rng(19);
  const auto data = simulate_bensmail(200, rng);
  const Hyperparams h = Hyperparams::from_data(data.values);
  GibbsOptions opt;
  const auto chain = run_gibbs(data.values, ModelFamily::SphericalFree, h, opt, rng);
  EXPECT_EQ(chain.samples.size(), 1900u);
  EXPECT_EQ(chain.K_mode, 2);
  EXPECT_EQ(static_cast<int>(chain.map_partition.size()), 200);
}

TEST(RunGibbsTest, RejectsBadOptions) {
  RngHandle rng(20);
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  GibbsOptions opt;
  opt.n_samples = 10;
  opt.burn_in = 10;
  EXPECT_THROW(run_gibbs(x, ModelFamily::SphericalEqual, hyper_1d(), opt, rng), std::invalid_argument);
}

TEST(RunGibbsTest, SameSeedSameChain) {
  RngHandle a(21), b(21), data_rng(22);
  const auto data = simulate_bensmail(60, data_rng);
  const Hyperparams h = Hyperparams::from_data(data.values);
  GibbsOptions opt;
  opt.n_samples = 150;
  opt.burn_in = 10;
  const auto c1 = run_gibbs(data.values, ModelFamily::GeneralEqual, h, opt, a);
  const auto c2 = run_gibbs(data.values, ModelFamily::GeneralEqual, h, opt, b);
  EXPECT_EQ(c1.K_trace(), c2.K_trace());
  EXPECT_EQ(c1.alpha_trace(), c2.alpha_trace());
  EXPECT_EQ(c1.map_partition, c2.map_partition);
}

TEST(ChainSummaryTest, ModeTieBreak) {
  EXPECT_EQ(posterior_mode_K(std::vector<int>{2, 2, 3, 2}), 2);
  EXPECT_EQ(posterior_mode_K(std::vector<int>{2, 3, 2, 3}), 2);
  EXPECT_EQ(posterior_mode_K(std::vector<int>{5}), 5);
  EXPECT_THROW(posterior_mode_K(std::vector<int>{}), std::invalid_argument);
}
