#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dppm/chain.hpp"
#include "dppm/models.hpp"

namespace dppm {

/// Flattened parameter vector of a mode-K sample, in unconstrained coordinates:
///   K-1 log proportion ratios log(pi_k / pi_K)
///   K means
///   log volumes and log shape entries
///   Cholesky factors of full covariances (log diagonal, raw off-diagonal)
///   Cayley coordinates of orientations, relative to a reference frame
///
/// Proportions are n_k / n from the labels, or the stored weights when the
/// sample carries them (finite chains).
struct ParameterCoordinates {
  Eigen::VectorXd values;
  /// log |d(natural parameters) / d(coordinates)|, needed to express the prior
  /// as a density over `values`.
  double log_jacobian = 0.0;
};

/// `reference` supplies the orientation frames the Cayley coordinates are taken
/// around; without one each frame is its own origin.
ParameterCoordinates vectorize_parameters(ModelFamily model, const ChainSample& sample,
                                          const ChainSample* reference = nullptr);

/// Convenience wrapper returning only the coordinate vector.
Eigen::VectorXd vectorize(ModelFamily model, const ChainSample& sample, const ChainSample* reference = nullptr);

/// Reorders the clusters of `sample` to match `reference` by greedy matching of
/// mean vectors (closest pair first). Labels, parameters and weights move together.
ChainSample align_labels(const ChainSample& sample, const ChainSample& reference);

/// Mixing proportions used for the likelihood term: stored weights if any,
/// otherwise occupancy fractions.
std::vector<double> plugin_weights(const ChainSample& sample);

struct MarginalLikelihoodEstimate {
  double log_ml = 0.0;
  int K = 0;
  int nu_m = 0;        // free_parameter_count(model, K, d)
  int dimension = 0;   // length of the coordinate vector used in the formula
  int n_samples = 0;   // mode-K samples entering the covariance estimate
  double log_det_H = 0.0;
  double log_lik = 0.0;
  double log_prior = 0.0;  // prior density of theta_hat in coordinate space
  Eigen::VectorXd theta_hat;
  std::size_t theta_hat_index = 0;  // index into chain.samples
};

/// Laplace-Metropolis estimate
///   log p(X) = dim/2 log(2 pi) + 1/2 log|H| + log p(X | theta_hat) + log p(theta_hat)
/// from the samples at the posterior mode of K. theta_hat maximizes
/// log p(X | theta) + log p(theta) among them; H is the sample covariance of
/// the aligned coordinate vectors.
MarginalLikelihoodEstimate laplace_marginal_loglik(const ChainResult& chain, ModelFamily model,
                                                   const Hyperparams& h, const Eigen::MatrixXd& x);

enum class Evidence { Negative, NotBad, Substantial, Strong, Decisive };

std::string_view evidence_name(Evidence e);

struct BayesFactorReport {
  double bf = 1.0;
  double two_log_bf = 0.0;
  Evidence evidence = Evidence::NotBad;
};

/// Band of 2 log BF: < 0, [0, 2), [2, 5), [5, 10), >= 10.
Evidence evidence_category(double two_log_bf);

BayesFactorReport bayes_factor(double logml_1, double logml_2);

struct ModelScore {
  ModelFamily model;
  int K = 1;
  double log_ml = 0.0;
  int d = 1;
};

struct Selection {
  ModelScore best;
  std::vector<ModelScore> ranking;
  std::optional<BayesFactorReport> versus_runner_up;
};

/// Ranks by log_ml (descending); ties go to fewer free parameters.
Selection select_model(std::vector<ModelScore> scores);

}  // namespace dppm
