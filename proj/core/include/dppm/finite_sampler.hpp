#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dppm/chain.hpp"
#include "dppm/models.hpp"
#include "dppm/random.hpp"

namespace dppm {

/// State of the fixed-K sampler. Clusters may be empty.
struct FiniteState {
  std::vector<int> z;
  std::vector<double> pi;
  MixtureParams params;

  int K() const { return params.size(); }
};

struct FiniteOptions {
  /// Symmetric Dirichlet prior Dir(conc / K, ..., conc / K) on the proportions.
  double dirichlet_conc = 1.0;
  int n_samples = 2000;
  int burn_in = 100;
};

/// Posterior class probabilities of one point, softmax of log pi_k + log f(x | theta_k).
std::vector<double> class_probabilities(const Eigen::VectorXd& x, ModelFamily model, const FiniteState& state);

/// Gibbs sampler for the finite Bayesian parsimonious mixture with K fixed.
/// Samples store the drawn proportions in `weights`; K_mode is always K.
ChainResult run_finite_gibbs(const Eigen::MatrixXd& x, ModelFamily model, int K, const Hyperparams& h,
                             const FiniteOptions& options, RngHandle& rng);

}  // namespace dppm
