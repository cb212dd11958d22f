#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dppm/random.hpp"

namespace dppm {

/// Eigenvalue-decomposition covariance structures Sigma_k = l_k D_k A_k D_k^T.
enum class ModelFamily {
  SphericalEqual,          // lI
  SphericalFree,           // lkI
  DiagonalEqual,           // lA
  DiagonalFree,            // lkA
  GeneralEqual,            // lDADt
  GeneralScaleFree,        // lkDADt
  GeneralOrientFree,       // lDkADkt
  GeneralOrientScaleFree,  // lkDkADkt
  GeneralFull,             // lkDkAkDkt
};

enum class CovarianceType { Spherical, Diagonal, General };

inline constexpr std::array<ModelFamily, 9> kAllModels = {
    ModelFamily::SphericalEqual,    ModelFamily::SphericalFree,    ModelFamily::DiagonalEqual,
    ModelFamily::DiagonalFree,      ModelFamily::GeneralEqual,     ModelFamily::GeneralScaleFree,
    ModelFamily::GeneralOrientFree, ModelFamily::GeneralOrientScaleFree, ModelFamily::GeneralFull,
};

/// Short code used on the command line and in result files ("lI", "lkDADt", ...).
std::string_view model_code(ModelFamily model);
std::optional<ModelFamily> parse_model(std::string_view code);
CovarianceType covariance_type(ModelFamily model);

/// Prior hyperparameters shared by all nine models.
struct Hyperparams {
  Eigen::VectorXd mu0;
  double kappa_n = 5.0;
  double nu0 = 4.0;
  Eigen::MatrixXd Lambda0;
  double s0_sq = 1.0;
  double alpha_a = 1.0;  // Gamma prior on the DP concentration: shape
  double alpha_b = 1.0;  // ... and rate

  int dim() const { return static_cast<int>(mu0.size()); }

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;

  /// Data-driven defaults: mu0 = column means, kappa_n = 5, nu0 = d + 2,
  /// Lambda0 = sample covariance, s0_sq = largest eigenvalue of Lambda0.
  static Hyperparams from_data(const Eigen::MatrixXd& x);

  /// Same as from_data but with kappa_n = 0.1.
  static Hyperparams appendix_preset(const Eigen::MatrixXd& x);
};

/// Per-cluster parameters. Which fields are live depends on the model:
///   volume       lkI, lkA, lkDADt, lkDkADkt
///   orientation  lDkADkt, lkDkADkt
///   covariance   lkDkAkDkt
struct Component {
  Eigen::VectorXd mean;
  double volume = 1.0;
  Eigen::MatrixXd orientation;
  Eigen::MatrixXd covariance;
};

/// Pieces held once per mixture:
///   volume       lI
///   shape        lA, lkA, lDkADkt, lkDkADkt (diagonal entries, not normalized)
///   covariance   lDADt (Sigma), lkDADt (Sigma_0)
struct SharedParams {
  double volume = 1.0;
  Eigen::VectorXd shape;
  Eigen::MatrixXd covariance;
};

struct MixtureParams {
  SharedParams shared;
  std::vector<Component> components;

  int size() const { return static_cast<int>(components.size()); }
};

struct SufficientStats {
  int n = 0;
  Eigen::VectorXd mean;     // zero when n == 0
  Eigen::MatrixXd scatter;  // sum of centered outer products
};

/// Stats of rows with z[i] == k (labels are zero-based).
SufficientStats sufficient_stats(const Eigen::MatrixXd& x, std::span<const int> z, int k);

/// Stats for clusters 0..K-1 in one pass.
std::vector<SufficientStats> cluster_stats(const Eigen::MatrixXd& x, std::span<const int> z, int K);

/// Posterior mean of a cluster mean: (n x_bar + kappa mu0) / (n + kappa).
Eigen::VectorXd posterior_mean(const SufficientStats& s, const Hyperparams& h);

/// n kappa / (n + kappa) (x_bar - mu0)(x_bar - mu0)^T.
Eigen::MatrixXd between_scatter(const SufficientStats& s, const Hyperparams& h);

struct InverseGammaParams {
  double shape;
  double scale;
};

struct InverseWishartParams {
  double dof;
  Eigen::MatrixXd scale;
};

/// Full conditionals of the covariance blocks, with the cluster means
/// integrated out. Exposed for testing.
namespace conditionals {

/// lI: common volume.
InverseGammaParams common_volume(std::span<const SufficientStats> stats, const Hyperparams& h);
/// lkI: volume of one cluster.
InverseGammaParams cluster_volume(const SufficientStats& s, const Hyperparams& h);
/// lDADt: common covariance.
InverseWishartParams common_covariance(std::span<const SufficientStats> stats, const Hyperparams& h);
/// lkDkAkDkt (and the orientation draw of lDkADkt, lkDkADkt): one cluster.
InverseWishartParams cluster_covariance(const SufficientStats& s, const Hyperparams& h);

}  // namespace conditionals

/// Draws shared pieces and K components from the prior.
MixtureParams sample_prior(ModelFamily model, const Hyperparams& h, int K, RngHandle& rng);

/// Draws one fresh component from the prior given the current shared pieces.
/// `anchor` marks the identifiability anchor of lkDADt (volume fixed to 1).
Component sample_prior_component(ModelFamily model, const Hyperparams& h, const SharedParams& shared,
                                 bool anchor, RngHandle& rng);

/// One sweep over the model's full conditionals. Covariance blocks are drawn
/// first (from their mean-marginalized conditionals), then the means.
/// stats.size() must equal current.size().
MixtureParams sample_posterior(ModelFamily model, std::span<const SufficientStats> stats,
                               const Hyperparams& h, const MixtureParams& current, RngHandle& rng);

MixtureParams sample_posterior(ModelFamily model, const Eigen::MatrixXd& x, std::span<const int> z,
                               const Hyperparams& h, const MixtureParams& current, RngHandle& rng);

/// Assembled covariance of component k.
Eigen::MatrixXd covariance_of(ModelFamily model, const MixtureParams& params, int k);
Eigen::MatrixXd covariance_of(ModelFamily model, const SharedParams& shared, const Component& c);

/// Number of free parameters for K components in dimension d.
int free_parameter_count(ModelFamily model, int K, int d);

/// Joint prior log-density of all blocks (volumes, shapes, covariances,
/// orientations, means). The orientation term is the density of the
/// canonical eigenvector frame with respect to the Haar probability measure.
double log_prior_density(ModelFamily model, const MixtureParams& params, const Hyperparams& h);

/// Canonical orthonormal eigenvector frame of a symmetric matrix: columns
/// ordered by decreasing eigenvalue, first nonzero entry of each positive.
Eigen::MatrixXd orientation_of(const Eigen::MatrixXd& symmetric);

/// Reporting form Sigma = volume * D diag(shape) D^T with det(diag(shape)) = 1
/// and shape entries decreasing.
struct Decomposition {
  double volume;
  Eigen::VectorXd shape;
  Eigen::MatrixXd orientation;

  Eigen::MatrixXd assemble() const;
};

Decomposition decompose(const Eigen::MatrixXd& covariance);

}  // namespace dppm
