#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace dppm {

/// Seedable random stream. One handle per chain; never shared across threads.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed = 0);

  /// Independent stream for sub-task `index` of a run seeded with `master`.
  static RngHandle derive(std::uint64_t master, std::uint64_t index);

  std::uint64_t seed() const { return seed_; }

  double uniform();         // (0, 1)
  double standard_normal();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Raised when a matrix that must be symmetric positive definite is not.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric positive-definite matrix with its Cholesky factor.
///
/// Construction is strict: the input must be symmetric to 1e-10 and its
/// Cholesky factorization must succeed as given. Sampler code that wants to
/// recover from round-off goes through `SpdMatrix::with_jitter`.
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd m, std::string_view name = "matrix");

  /// Symmetrizes, then factorizes; on failure retries once after adding
  /// 1e-9 * trace / d to the diagonal.
  static SpdMatrix with_jitter(const Eigen::MatrixXd& m, std::string_view name = "matrix");

  static SpdMatrix identity(int d) { return SpdMatrix(Eigen::MatrixXd::Identity(d, d)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }
  Eigen::MatrixXd lower() const { return llt_.matrixL(); }
  double log_det() const;
  Eigen::MatrixXd inverse() const;

 private:
  struct Unchecked {};
  SpdMatrix(Eigen::MatrixXd m, Eigen::LLT<Eigen::MatrixXd> llt, Unchecked)
      : m_(std::move(m)), llt_(std::move(llt)) {}

  Eigen::MatrixXd m_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// ---------------------------------------------------------------------------
// Variate generation
// ---------------------------------------------------------------------------

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SpdMatrix& cov, RngHandle& rng);

/// Wishart(dof, scale) by Bartlett decomposition. Requires dof > d - 1.
SpdMatrix sample_wishart(double dof, const SpdMatrix& scale, RngHandle& rng);

/// Inverse-Wishart with density proportional to
/// |X|^{-(dof+d+1)/2} exp(-tr(scale X^{-1}) / 2); mean scale / (dof - d - 1).
SpdMatrix sample_inverse_wishart(double dof, const SpdMatrix& scale, RngHandle& rng);

/// Density proportional to x^{-(shape+1)} exp(-scale / x).
double sample_inverse_gamma(double shape, double scale, RngHandle& rng);

/// Density proportional to x^{shape-1} exp(-x / scale).
double sample_gamma(double shape, double scale, RngHandle& rng);
double sample_beta(double a, double b, RngHandle& rng);
std::vector<double> sample_dirichlet(std::span<const double> concentrations, RngHandle& rng);

/// Draws an index with probability proportional to exp(log_weights[i]).
std::size_t sample_categorical(std::span<const double> log_weights, RngHandle& rng);

// ---------------------------------------------------------------------------
// Log densities (exact, with normalizing constants; -inf outside support)
// ---------------------------------------------------------------------------

double log_sum_exp(std::span<const double> values);

/// log Gamma_d(x), the multivariate gamma function.
double log_multivariate_gamma(double x, int d);

double logpdf_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const SpdMatrix& cov);
double logpdf_inverse_wishart(const Eigen::MatrixXd& x, double dof, const SpdMatrix& scale);
double logpdf_inverse_gamma(double x, double shape, double scale);
double logpdf_gamma(double x, double shape, double scale);
double logpdf_dirichlet(std::span<const double> x, std::span<const double> concentrations);

/// Multivariate normal with a precomputed factor, for hot loops that
/// evaluate the same component many times.
class GaussianDensity {
 public:
  GaussianDensity() = default;
  GaussianDensity(Eigen::VectorXd mean, const SpdMatrix& cov);

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  const Eigen::VectorXd& mean() const { return mean_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd lower_;
  double log_norm_ = 0.0;
  mutable Eigen::VectorXd work_;
};

}  // namespace dppm
