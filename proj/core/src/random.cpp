#include "dppm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dppm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// RngHandle
// ---------------------------------------------------------------------------

RngHandle::RngHandle(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngHandle RngHandle::derive(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint64_t words[2];
  std::uint32_t raw[4];
  seq.generate(std::begin(raw), std::end(raw));
  words[0] = (static_cast<std::uint64_t>(raw[0]) << 32) | raw[1];
  words[1] = (static_cast<std::uint64_t>(raw[2]) << 32) | raw[3];
  return RngHandle(words[0] ^ (words[1] << 1));
}

double RngHandle::uniform() {
  // 53 random bits, shifted half a step off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngHandle::standard_normal() { return normal_(engine_); }

// ---------------------------------------------------------------------------
// SpdMatrix
// ---------------------------------------------------------------------------

SpdMatrix::SpdMatrix(Eigen::MatrixXd m, std::string_view name) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols())
    throw FactorizationError(std::string(name) + ": not a non-empty square matrix");
  if (!m_.allFinite()) throw FactorizationError(std::string(name) + ": non-finite entries");
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw FactorizationError(std::string(name) + ": not symmetric");
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success)
    throw FactorizationError(std::string(name) + ": Cholesky factorization failed (not positive definite)");
}

SpdMatrix SpdMatrix::with_jitter(const Eigen::MatrixXd& m, std::string_view name) {
  if (m.rows() == 0 || m.rows() != m.cols() || !m.allFinite())
    throw FactorizationError(std::string(name) + ": not a finite non-empty square matrix");
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return SpdMatrix(std::move(sym), std::move(llt), Unchecked{});

  const double jitter = 1e-9 * std::abs(sym.trace()) / static_cast<double>(sym.rows());
  sym.diagonal().array() += jitter;
  llt.compute(sym);
  if (llt.info() != Eigen::Success)
    throw FactorizationError(std::string(name) + ": Cholesky factorization failed after jitter retry");
  return SpdMatrix(std::move(sym), std::move(llt), Unchecked{});
}

double SpdMatrix::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd SpdMatrix::inverse() const {
  return llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SpdMatrix& cov, RngHandle& rng) {
  if (mean.size() != cov.dim())
    throw std::invalid_argument("sample_mvn: mean length does not match covariance dimension");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.standard_normal();
  return mean + cov.llt().matrixL() * z;
}

namespace {

// Lower-triangular Bartlett factor A with W = (L A)(L A)^T ~ Wishart(dof, L L^T).
Eigen::MatrixXd bartlett_factor(double dof, int d, RngHandle& rng) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(sample_gamma(0.5 * (dof - i), 2.0, rng));
    for (int j = 0; j < i; ++j) a(i, j) = rng.standard_normal();
  }
  return a;
}

}  // namespace

SpdMatrix sample_wishart(double dof, const SpdMatrix& scale, RngHandle& rng) {
  const int d = scale.dim();
  require(dof > d - 1, "sample_wishart: degrees of freedom must exceed d - 1");
  const Eigen::MatrixXd la = scale.lower() * bartlett_factor(dof, d, rng);
  return SpdMatrix::with_jitter(la * la.transpose(), "Wishart draw");
}

SpdMatrix sample_inverse_wishart(double dof, const SpdMatrix& scale, RngHandle& rng) {
  const int d = scale.dim();
  require(dof > d - 1, "sample_inverse_wishart: degrees of freedom must exceed d - 1");
  // W ~ Wishart(dof, scale^{-1}) = M M^T with M = chol(scale^{-1}) A; X = W^{-1}.
  const SpdMatrix inv_scale = SpdMatrix::with_jitter(scale.inverse(), "inverse-Wishart scale inverse");
  const Eigen::MatrixXd m = inv_scale.lower() * bartlett_factor(dof, d, rng);
  const Eigen::MatrixXd m_inv =
      m.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  return SpdMatrix::with_jitter(m_inv.transpose() * m_inv, "inverse-Wishart draw");
}

double sample_inverse_gamma(double shape, double scale, RngHandle& rng) {
  require(shape > 0.0 && scale > 0.0, "sample_inverse_gamma: parameters must be positive");
  return 1.0 / sample_gamma(shape, 1.0 / scale, rng);
}

double sample_gamma(double shape, double scale, RngHandle& rng) {
  require(shape > 0.0 && scale > 0.0 && std::isfinite(shape) && std::isfinite(scale),
          "sample_gamma: parameters must be positive and finite");
  std::gamma_distribution<double> g(shape, scale);
  double x = g(rng.engine());
  // Tiny shapes can underflow to zero; keep the draw in the open support.
  return std::max(x, std::numeric_limits<double>::min());
}

double sample_beta(double a, double b, RngHandle& rng) {
  require(a > 0.0 && b > 0.0, "sample_beta: parameters must be positive");
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  return x / (x + y);
}

std::vector<double> sample_dirichlet(std::span<const double> concentrations, RngHandle& rng) {
  if (concentrations.empty()) throw std::invalid_argument("sample_dirichlet: empty concentration vector");
  std::vector<double> out(concentrations.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    require(concentrations[k] > 0.0, "sample_dirichlet: concentrations must be positive");
    out[k] = sample_gamma(concentrations[k], 1.0, rng);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t sample_categorical(std::span<const double> log_weights, RngHandle& rng) {
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm))
    throw std::domain_error("sample_categorical: no finite log-weight");
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    if (log_weights[k] == kNegInf) continue;
    cum += std::exp(log_weights[k] - norm);
    last_positive = k;
    if (u < cum) return k;
  }
  return last_positive;
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_multivariate_gamma(double x, int d) {
  double r = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < d; ++j) r += std::lgamma(x - 0.5 * j);
  return r;
}

double logpdf_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const SpdMatrix& cov) {
  if (x.size() != cov.dim() || mean.size() != cov.dim())
    throw std::invalid_argument("logpdf_mvn: dimension mismatch");
  const Eigen::VectorXd r = cov.llt().matrixL().solve(x - mean);
  return -0.5 * (cov.dim() * kLog2Pi + cov.log_det() + r.squaredNorm());
}

double logpdf_inverse_wishart(const Eigen::MatrixXd& x, double dof, const SpdMatrix& scale) {
  const int d = scale.dim();
  if (x.rows() != d || x.cols() != d) throw std::invalid_argument("logpdf_inverse_wishart: dimension mismatch");
  if (!(dof > d - 1)) return kNegInf;
  if ((x - x.transpose()).cwiseAbs().maxCoeff() > 1e-8) return kNegInf;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (x + x.transpose()));
  if (llt.info() != Eigen::Success) return kNegInf;
  const double log_det_x = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double trace_term = llt.solve(scale.matrix()).trace();
  return 0.5 * dof * scale.log_det() - 0.5 * dof * d * std::numbers::ln2 -
         log_multivariate_gamma(0.5 * dof, d) - 0.5 * (dof + d + 1) * log_det_x - 0.5 * trace_term;
}

double logpdf_inverse_gamma(double x, double shape, double scale) {
  if (!(x > 0.0) || !(shape > 0.0) || !(scale > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double logpdf_gamma(double x, double shape, double scale) {
  if (!(x > 0.0) || !(shape > 0.0) || !(scale > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

double logpdf_dirichlet(std::span<const double> x, std::span<const double> concentrations) {
  if (x.size() != concentrations.size() || x.empty())
    throw std::invalid_argument("logpdf_dirichlet: dimension mismatch");
  double sum_x = 0.0, sum_a = 0.0, r = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(concentrations[k] > 0.0)) return kNegInf;
    sum_x += x[k];
    sum_a += concentrations[k];
    r += (concentrations[k] - 1.0) * std::log(x[k]) - std::lgamma(concentrations[k]);
  }
  if (std::abs(sum_x - 1.0) > 1e-9) return kNegInf;
  return r + std::lgamma(sum_a);
}

// ---------------------------------------------------------------------------
// GaussianDensity
// ---------------------------------------------------------------------------

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, const SpdMatrix& cov)
    : mean_(std::move(mean)), lower_(cov.lower()), work_(mean_.size()) {
  if (mean_.size() != cov.dim()) throw std::invalid_argument("GaussianDensity: dimension mismatch");
  log_norm_ = -0.5 * (cov.dim() * kLog2Pi + cov.log_det());
}

double GaussianDensity::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  work_.noalias() = x - mean_;
  lower_.triangularView<Eigen::Lower>().solveInPlace(work_);
  return log_norm_ - 0.5 * work_.squaredNorm();
}

}  // namespace dppm
