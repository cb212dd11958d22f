#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dppm/chain.hpp"
#include "dppm/models.hpp"
#include "dppm/random.hpp"

namespace dppm {

/// Current state of the CRP Gibbs sampler. Labels are contiguous in 0..K-1
/// and every cluster is occupied between steps.
struct GibbsState {
  std::vector<int> z;
  MixtureParams params;
  double alpha = 1.0;

  int K() const { return params.size(); }
};

/// Polya-urn predictive: entry k is n_k / (alpha + total), the final entry
/// alpha / (alpha + total) for a new cluster, total = sum of counts.
std::vector<double> crp_predictive(std::span<const int> counts, double alpha);

/// log of the CRP probability of a partition with the given cluster sizes.
double crp_log_prior(std::span<const int> counts, double alpha);

/// Mixture weight of the Gamma(a + K, .) term in the concentration update.
double alpha_mixture_weight(double a, double b, int K, int n, double eta);

/// Auxiliary-variable update of the concentration parameter under a
/// Gamma(a, rate b) prior.
double sample_alpha(double alpha, int K, int n, double a, double b, RngHandle& rng);

struct GibbsOptions {
  int n_samples = 2000;
  int burn_in = 100;
  /// Holds alpha fixed instead of resampling it.
  std::optional<double> fixed_alpha;
  /// Replaces f(x | theta) by a constant, so labels follow the CRP prior.
  bool prior_only = false;
};

/// Label update for one point (component densities are evaluated fresh).
/// A singleton's own parameters serve as the auxiliary new-cluster candidate;
/// otherwise the candidate is a single prior draw.
void resample_label(int i, GibbsState& state, const Eigen::MatrixXd& x, ModelFamily model,
                    const Hyperparams& h, RngHandle& rng, bool prior_only = false);

/// Runs the sampler from a single prior-drawn cluster.
ChainResult run_gibbs(const Eigen::MatrixXd& x, ModelFamily model, const Hyperparams& h,
                      const GibbsOptions& options, RngHandle& rng);

/// Same, continuing from a given state.
ChainResult run_gibbs(const Eigen::MatrixXd& x, ModelFamily model, const Hyperparams& h,
                      const GibbsOptions& options, GibbsState state, RngHandle& rng);

}  // namespace dppm
