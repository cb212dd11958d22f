#pragma once

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dppm/models.hpp"

namespace dppm {

/// One stored post-burn-in Gibbs state.
struct ChainSample {
  std::vector<int> z;            // zero-based labels
  MixtureParams params;
  std::vector<double> weights;   // sampled proportions (finite chains only)
  double alpha = 0.0;            // DP concentration (DP chains only)
  int K = 0;
  double log_joint = 0.0;        // sum_i log f(x_i | theta_{z_i}) + log prior of z
};

struct ChainResult {
  ModelFamily model = ModelFamily::GeneralFull;
  std::vector<ChainSample> samples;
  int K_mode = 0;
  std::vector<int> map_partition;
  double log_marginal = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_sample_loglik;  // sum_i log f(x_i | theta_{z_i})

  std::vector<int> K_trace() const;
  std::vector<double> alpha_trace() const;
};

/// Most frequent K; ties go to the smaller K.
int posterior_mode_K(std::span<const int> K_sequence);
int posterior_mode_K(const ChainResult& chain);

/// Fraction of samples with K == K_mode.
double mode_mass(const ChainResult& chain);

/// Fills K_mode and map_partition (the mode-K sample with the largest log_joint).
void summarize_chain(ChainResult& chain);

/// Finite-mixture log-likelihood sum_i log sum_k pi_k N(x_i | mu_k, Sigma_k).
double mixture_loglik(ModelFamily model, const Eigen::MatrixXd& x, const MixtureParams& params,
                      std::span<const double> weights);

/// Complete-data log-likelihood sum_i log N(x_i | mu_{z_i}, Sigma_{z_i}).
double complete_loglik(ModelFamily model, const Eigen::MatrixXd& x, std::span<const int> z,
                       const MixtureParams& params);

/// Occupancy counts n_k for labels in 0..K-1.
std::vector<int> label_counts(std::span<const int> z, int K);

}  // namespace dppm
