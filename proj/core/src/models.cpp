#include "dppm/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dppm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ModelInfo {
  ModelFamily model;
  std::string_view code;
  CovarianceType type;
};

constexpr std::array<ModelInfo, 9> kModelInfo = {{
    {ModelFamily::SphericalEqual, "lI", CovarianceType::Spherical},
    {ModelFamily::SphericalFree, "lkI", CovarianceType::Spherical},
    {ModelFamily::DiagonalEqual, "lA", CovarianceType::Diagonal},
    {ModelFamily::DiagonalFree, "lkA", CovarianceType::Diagonal},
    {ModelFamily::GeneralEqual, "lDADt", CovarianceType::General},
    {ModelFamily::GeneralScaleFree, "lkDADt", CovarianceType::General},
    {ModelFamily::GeneralOrientFree, "lDkADkt", CovarianceType::General},
    {ModelFamily::GeneralOrientScaleFree, "lkDkADkt", CovarianceType::General},
    {ModelFamily::GeneralFull, "lkDkAkDkt", CovarianceType::General},
}};

const ModelInfo& info(ModelFamily model) {
  return kModelInfo[static_cast<std::size_t>(model)];
}

bool has_component_volume(ModelFamily m) {
  return m == ModelFamily::SphericalFree || m == ModelFamily::DiagonalFree ||
         m == ModelFamily::GeneralScaleFree || m == ModelFamily::GeneralOrientScaleFree;
}

bool has_shared_shape(ModelFamily m) {
  return m == ModelFamily::DiagonalEqual || m == ModelFamily::DiagonalFree ||
         m == ModelFamily::GeneralOrientFree || m == ModelFamily::GeneralOrientScaleFree;
}

bool has_orientation(ModelFamily m) {
  return m == ModelFamily::GeneralOrientFree || m == ModelFamily::GeneralOrientScaleFree;
}

Eigen::MatrixXd diag_matrix(const Eigen::VectorXd& v) { return v.asDiagonal(); }

double sample_volume_prior(const Hyperparams& h, RngHandle& rng) {
  return sample_inverse_gamma(0.5 * h.nu0, 0.5 * h.s0_sq, rng);
}

Eigen::VectorXd sample_shape_prior(const Hyperparams& h, RngHandle& rng) {
  Eigen::VectorXd a(h.dim());
  for (int j = 0; j < h.dim(); ++j) a(j) = sample_volume_prior(h, rng);
  return a;
}

// Rethrows factorization failures with the model and block named.
template <typename F>
auto in_block(ModelFamily model, std::string_view block, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const FactorizationError& e) {
    throw FactorizationError("posterior sweep for model " + std::string(model_code(model)) + ", block " +
                             std::string(block) + ": " + e.what());
  }
}

}  // namespace

std::string_view model_code(ModelFamily model) { return info(model).code; }

std::optional<ModelFamily> parse_model(std::string_view code) {
  for (const auto& m : kModelInfo)
    if (m.code == code) return m.model;
  return std::nullopt;
}

CovarianceType covariance_type(ModelFamily model) { return info(model).type; }

// ---------------------------------------------------------------------------
// Hyperparams
// ---------------------------------------------------------------------------

void Hyperparams::validate() const {
  const int d = dim();
  if (d < 1) throw std::invalid_argument("hyperparameters: mu0 is empty");
  if (Lambda0.rows() != d || Lambda0.cols() != d)
    throw std::invalid_argument("hyperparameters: Lambda0 dimension does not match mu0");
  if (!(kappa_n > 0.0)) throw std::invalid_argument("hyperparameters: kappa_n must be positive");
  if (!(nu0 > d - 1)) throw std::invalid_argument("hyperparameters: nu0 must exceed d - 1");
  if (!(s0_sq > 0.0)) throw std::invalid_argument("hyperparameters: s0_sq must be positive");
  if (!(alpha_a > 0.0) || !(alpha_b > 0.0))
    throw std::invalid_argument("hyperparameters: alpha prior parameters must be positive");
  try {
    SpdMatrix check(Lambda0, "Lambda0");
  } catch (const FactorizationError& e) {
    throw std::invalid_argument(std::string("hyperparameters: ") + e.what());
  }
}

Hyperparams Hyperparams::from_data(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw std::invalid_argument("hyperparameters: need at least two observations");
  Hyperparams h;
  const int d = static_cast<int>(x.cols());
  h.mu0 = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - h.mu0.transpose();
  h.Lambda0 = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  h.kappa_n = 5.0;
  h.nu0 = d + 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.Lambda0, Eigen::EigenvaluesOnly);
  h.s0_sq = es.eigenvalues().maxCoeff();
  return h;
}

Hyperparams Hyperparams::appendix_preset(const Eigen::MatrixXd& x) {
  Hyperparams h = from_data(x);
  h.kappa_n = 0.1;
  return h;
}

// ---------------------------------------------------------------------------
// Sufficient statistics
// ---------------------------------------------------------------------------

SufficientStats sufficient_stats(const Eigen::MatrixXd& x, std::span<const int> z, int k) {
  const int d = static_cast<int>(x.cols());
  SufficientStats s{0, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != k) continue;
    ++s.n;
    s.mean += x.row(static_cast<Eigen::Index>(i)).transpose();
  }
  if (s.n == 0) return s;
  s.mean /= s.n;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != k) continue;
    const Eigen::VectorXd c = x.row(static_cast<Eigen::Index>(i)).transpose() - s.mean;
    s.scatter.noalias() += c * c.transpose();
  }
  return s;
}

std::vector<SufficientStats> cluster_stats(const Eigen::MatrixXd& x, std::span<const int> z, int K) {
  const int d = static_cast<int>(x.cols());
  std::vector<SufficientStats> stats(K, SufficientStats{0, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)});
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto& s = stats.at(z[i]);
    ++s.n;
    s.mean += x.row(static_cast<Eigen::Index>(i)).transpose();
  }
  for (auto& s : stats)
    if (s.n > 0) s.mean /= s.n;
  Eigen::VectorXd c(d);
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto& s = stats[z[i]];
    c = x.row(static_cast<Eigen::Index>(i)).transpose() - s.mean;
    s.scatter.noalias() += c * c.transpose();
  }
  return stats;
}

Eigen::VectorXd posterior_mean(const SufficientStats& s, const Hyperparams& h) {
  if (s.n == 0) return h.mu0;
  return (s.n * s.mean + h.kappa_n * h.mu0) / (s.n + h.kappa_n);
}

Eigen::MatrixXd between_scatter(const SufficientStats& s, const Hyperparams& h) {
  const int d = h.dim();
  if (s.n == 0) return Eigen::MatrixXd::Zero(d, d);
  const Eigen::VectorXd diff = s.mean - h.mu0;
  return (s.n * h.kappa_n / (s.n + h.kappa_n)) * diff * diff.transpose();
}

// ---------------------------------------------------------------------------
// Conditionals
// ---------------------------------------------------------------------------

namespace conditionals {

InverseGammaParams common_volume(std::span<const SufficientStats> stats, const Hyperparams& h) {
  const int d = h.dim();
  int n = 0;
  double scale = h.s0_sq;
  for (const auto& s : stats) {
    n += s.n;
    scale += s.scatter.trace() + between_scatter(s, h).trace();
  }
  return {0.5 * (h.nu0 + static_cast<double>(n) * d), 0.5 * scale};
}

InverseGammaParams cluster_volume(const SufficientStats& s, const Hyperparams& h) {
  const int d = h.dim();
  return {0.5 * (h.nu0 + static_cast<double>(d) * s.n),
          0.5 * (h.s0_sq + s.scatter.trace() + between_scatter(s, h).trace())};
}

InverseWishartParams common_covariance(std::span<const SufficientStats> stats, const Hyperparams& h) {
  InverseWishartParams p{h.nu0, h.Lambda0};
  for (const auto& s : stats) {
    p.dof += s.n;
    p.scale += s.scatter + between_scatter(s, h);
  }
  return p;
}

InverseWishartParams cluster_covariance(const SufficientStats& s, const Hyperparams& h) {
  return {h.nu0 + s.n, h.Lambda0 + s.scatter + between_scatter(s, h)};
}

}  // namespace conditionals

// ---------------------------------------------------------------------------
// Prior draws
// ---------------------------------------------------------------------------

Component sample_prior_component(ModelFamily model, const Hyperparams& h, const SharedParams& shared,
                                 bool anchor, RngHandle& rng) {
  Component c;
  c.mean = Eigen::VectorXd::Zero(h.dim());
  if (has_component_volume(model)) {
    c.volume = (model == ModelFamily::GeneralScaleFree && anchor) ? 1.0 : sample_volume_prior(h, rng);
  }
  if (has_orientation(model)) {
    const SpdMatrix draw = sample_inverse_wishart(h.nu0, SpdMatrix(h.Lambda0, "Lambda0"), rng);
    c.orientation = orientation_of(draw.matrix());
  }
  if (model == ModelFamily::GeneralFull) {
    c.covariance = sample_inverse_wishart(h.nu0, SpdMatrix(h.Lambda0, "Lambda0"), rng).matrix();
  }

  const Eigen::MatrixXd cov = covariance_of(model, shared, c);
  c.mean = sample_mvn(h.mu0, SpdMatrix::with_jitter(cov / h.kappa_n, "prior mean covariance"), rng);
  return c;
}

MixtureParams sample_prior(ModelFamily model, const Hyperparams& h, int K, RngHandle& rng) {
  h.validate();
  if (K < 1) throw std::invalid_argument("sample_prior: K must be positive");
  MixtureParams p;
  switch (model) {
    case ModelFamily::SphericalEqual:
      p.shared.volume = sample_volume_prior(h, rng);
      break;
    case ModelFamily::GeneralEqual:
    case ModelFamily::GeneralScaleFree:
      p.shared.covariance = sample_inverse_wishart(h.nu0, SpdMatrix(h.Lambda0, "Lambda0"), rng).matrix();
      break;
    default:
      break;
  }
  if (has_shared_shape(model)) p.shared.shape = sample_shape_prior(h, rng);
  p.components.reserve(K);
  for (int k = 0; k < K; ++k) p.components.push_back(sample_prior_component(model, h, p.shared, k == 0, rng));
  return p;
}

// ---------------------------------------------------------------------------
// Posterior sweep
// ---------------------------------------------------------------------------

MixtureParams sample_posterior(ModelFamily model, std::span<const SufficientStats> stats,
                               const Hyperparams& h, const MixtureParams& current, RngHandle& rng) {
  const int K = current.size();
  const int d = h.dim();
  if (static_cast<int>(stats.size()) != K)
    throw std::invalid_argument("sample_posterior: stats and components disagree on K");
  if (K < 1) throw std::invalid_argument("sample_posterior: no components");

  MixtureParams next = current;
  int n = 0;
  for (const auto& s : stats) n += s.n;

  // Data scatter about mu0 (W_k + B_k) and its prior-augmented form.
  std::vector<Eigen::MatrixXd> scatter(K), augmented(K);
  for (int k = 0; k < K; ++k) {
    scatter[k] = stats[k].scatter + between_scatter(stats[k], h);
    augmented[k] = scatter[k] + h.Lambda0;
  }

  auto draw_orientations = [&] {
    for (int k = 0; k < K; ++k) {
      const auto p = conditionals::cluster_covariance(stats[k], h);
      const SpdMatrix draw = in_block(model, "orientation", [&] {
        return sample_inverse_wishart(p.dof, SpdMatrix::with_jitter(p.scale, "orientation scale"), rng);
      });
      next.components[k].orientation = orientation_of(draw.matrix());
    }
  };

  auto draw_shape = [&](double shape_param, bool divide_by_volume) {
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXd m = augmented[k];
      if (has_orientation(model)) {
        const auto& dk = next.components[k].orientation;
        m = dk.transpose() * m * dk;
      }
      if (divide_by_volume) m /= next.components[k].volume;
      scale += m.diagonal();
    }
    for (int j = 0; j < d; ++j) next.shared.shape(j) = sample_inverse_gamma(0.5 * shape_param, 0.5 * scale(j), rng);
  };

  switch (model) {
    case ModelFamily::SphericalEqual: {
      const auto p = conditionals::common_volume(stats, h);
      next.shared.volume = sample_inverse_gamma(p.shape, p.scale, rng);
      break;
    }
    case ModelFamily::SphericalFree:
      for (int k = 0; k < K; ++k) {
        const auto p = conditionals::cluster_volume(stats[k], h);
        next.components[k].volume = sample_inverse_gamma(p.shape, p.scale, rng);
      }
      break;
    case ModelFamily::DiagonalEqual:
      draw_shape(n + h.nu0 + K * (d + 1.0) - 2.0, false);
      break;
    case ModelFamily::DiagonalFree: {
      draw_shape(n + h.nu0 + K * d + 1.0, true);
      const Eigen::VectorXd inv_a = next.shared.shape.cwiseInverse();
      for (int k = 0; k < K; ++k) {
        const double tr = (inv_a.asDiagonal() * augmented[k]).trace();
        next.components[k].volume =
            sample_inverse_gamma(0.5 * (h.nu0 + stats[k].n * d), 0.5 * (h.s0_sq + tr), rng);
      }
      break;
    }
    case ModelFamily::GeneralEqual: {
      const auto p = conditionals::common_covariance(stats, h);
      next.shared.covariance = in_block(model, "Sigma", [&] {
        return sample_inverse_wishart(p.dof, SpdMatrix::with_jitter(p.scale, "Sigma scale"), rng).matrix();
      });
      break;
    }
    case ModelFamily::GeneralScaleFree: {
      const SpdMatrix sigma0 = in_block(model, "Sigma0", [&] {
        return SpdMatrix::with_jitter(next.shared.covariance, "Sigma0");
      });
      next.components[0].volume = 1.0;
      for (int k = 1; k < K; ++k) {
        const double tr = sigma0.llt().solve(scatter[k]).trace();
        next.components[k].volume =
            sample_inverse_gamma(0.5 * (h.nu0 + stats[k].n * d), 0.5 * (h.s0_sq + tr), rng);
      }
      Eigen::MatrixXd scale = h.Lambda0;
      for (int k = 0; k < K; ++k) scale += scatter[k] / next.components[k].volume;
      next.shared.covariance = in_block(model, "Sigma0", [&] {
        return sample_inverse_wishart(h.nu0 + n, SpdMatrix::with_jitter(scale, "Sigma0 scale"), rng).matrix();
      });
      break;
    }
    case ModelFamily::GeneralOrientFree:
      draw_orientations();
      draw_shape(n + h.nu0 + K * (d + 1.0) - 2.0, false);
      break;
    case ModelFamily::GeneralOrientScaleFree: {
      draw_orientations();
      draw_shape(n + h.nu0 + K * d + 1.0, true);
      const Eigen::VectorXd inv_a = next.shared.shape.cwiseInverse();
      for (int k = 0; k < K; ++k) {
        const auto& dk = next.components[k].orientation;
        const double tr = (dk * inv_a.asDiagonal() * dk.transpose() * augmented[k]).trace();
        next.components[k].volume =
            sample_inverse_gamma(0.5 * (h.nu0 + stats[k].n * d), 0.5 * (h.s0_sq + tr), rng);
      }
      break;
    }
    case ModelFamily::GeneralFull:
      for (int k = 0; k < K; ++k) {
        const auto p = conditionals::cluster_covariance(stats[k], h);
        next.components[k].covariance = in_block(model, "Sigma_k", [&] {
          return sample_inverse_wishart(p.dof, SpdMatrix::with_jitter(p.scale, "Sigma_k scale"), rng).matrix();
        });
      }
      break;
  }

  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXd cov = covariance_of(model, next, k) / (stats[k].n + h.kappa_n);
    next.components[k].mean = in_block(model, "mean", [&] {
      return sample_mvn(posterior_mean(stats[k], h), SpdMatrix::with_jitter(cov, "mean covariance"), rng);
    });
  }
  return next;
}

MixtureParams sample_posterior(ModelFamily model, const Eigen::MatrixXd& x, std::span<const int> z,
                               const Hyperparams& h, const MixtureParams& current, RngHandle& rng) {
  const auto stats = cluster_stats(x, z, current.size());
  return sample_posterior(model, stats, h, current, rng);
}

// ---------------------------------------------------------------------------
// Covariance assembly and counting
// ---------------------------------------------------------------------------

Eigen::MatrixXd covariance_of(ModelFamily model, const MixtureParams& params, int k) {
  return covariance_of(model, params.shared, params.components.at(k));
}

Eigen::MatrixXd covariance_of(ModelFamily model, const SharedParams& shared, const Component& c) {
  const int d = static_cast<int>(c.mean.size());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  switch (model) {
    case ModelFamily::SphericalEqual:
      return shared.volume * I;
    case ModelFamily::SphericalFree:
      return c.volume * I;
    case ModelFamily::DiagonalEqual:
      return diag_matrix(shared.shape);
    case ModelFamily::DiagonalFree:
      return c.volume * diag_matrix(shared.shape);
    case ModelFamily::GeneralEqual:
      return shared.covariance;
    case ModelFamily::GeneralScaleFree:
      return c.volume * shared.covariance;
    case ModelFamily::GeneralOrientFree:
    case ModelFamily::GeneralOrientScaleFree: {
      Eigen::MatrixXd s = c.orientation * shared.shape.asDiagonal() * c.orientation.transpose();
      s = 0.5 * (s + s.transpose());
      return model == ModelFamily::GeneralOrientScaleFree ? Eigen::MatrixXd(c.volume * s) : s;
    }
    case ModelFamily::GeneralFull:
      return c.covariance;
  }
  throw std::logic_error("covariance_of: unknown model");
}

int free_parameter_count(ModelFamily model, int K, int d) {
  if (K < 1 || d < 1) throw std::invalid_argument("free_parameter_count: K and d must be positive");
  const int upsilon = (K - 1) + K * d;
  const int omega = d * (d + 1) / 2;
  switch (model) {
    case ModelFamily::SphericalEqual: return upsilon + 1;
    case ModelFamily::SphericalFree: return upsilon + d;
    case ModelFamily::DiagonalEqual: return upsilon + d;
    case ModelFamily::DiagonalFree: return upsilon + d + K - 1;
    case ModelFamily::GeneralEqual: return upsilon + omega;
    case ModelFamily::GeneralScaleFree: return upsilon + omega + K - 1;
    case ModelFamily::GeneralOrientFree: return upsilon + K * omega - (K - 1) * d;
    case ModelFamily::GeneralOrientScaleFree: return upsilon + K * omega - (K - 1) * (d - 1);
    case ModelFamily::GeneralFull: return upsilon + K * omega;
  }
  throw std::logic_error("free_parameter_count: unknown model");
}

// ---------------------------------------------------------------------------
// Prior density
// ---------------------------------------------------------------------------

double log_prior_density(ModelFamily model, const MixtureParams& params, const Hyperparams& h) {
  const int d = h.dim();
  const double ig_shape = 0.5 * h.nu0;
  const double ig_scale = 0.5 * h.s0_sq;
  double lp = 0.0;

  auto add = [&lp](double v) {
    lp += v;
    return std::isfinite(lp);
  };

  if (model == ModelFamily::SphericalEqual && !add(logpdf_inverse_gamma(params.shared.volume, ig_shape, ig_scale)))
    return kNegInf;
  if (has_shared_shape(model)) {
    if (params.shared.shape.size() != d) return kNegInf;
    for (int j = 0; j < d; ++j)
      if (!add(logpdf_inverse_gamma(params.shared.shape(j), ig_shape, ig_scale))) return kNegInf;
  }
  const SpdMatrix lambda0(h.Lambda0, "Lambda0");
  if (model == ModelFamily::GeneralEqual || model == ModelFamily::GeneralScaleFree) {
    if (!add(logpdf_inverse_wishart(params.shared.covariance, h.nu0, lambda0))) return kNegInf;
  }

  // Canonical frames occupy 1 / 2^{d-1} of SO(d).
  const double orientation_term = (d - 1) * std::numbers::ln2;

  for (int k = 0; k < params.size(); ++k) {
    const Component& c = params.components[k];
    if (has_component_volume(model)) {
      const bool anchored = model == ModelFamily::GeneralScaleFree && k == 0;
      if (anchored) {
        if (c.volume != 1.0) return kNegInf;
      } else if (!add(logpdf_inverse_gamma(c.volume, ig_shape, ig_scale))) {
        return kNegInf;
      }
    }
    if (has_orientation(model)) add(orientation_term);
    if (model == ModelFamily::GeneralFull && !add(logpdf_inverse_wishart(c.covariance, h.nu0, lambda0)))
      return kNegInf;

    Eigen::LLT<Eigen::MatrixXd> llt(covariance_of(model, params, k) / h.kappa_n);
    if (llt.info() != Eigen::Success) return kNegInf;
    const Eigen::VectorXd r = llt.matrixL().solve(c.mean - h.mu0);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (!add(-0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + r.squaredNorm()))) return kNegInf;
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

Eigen::MatrixXd orientation_of(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (symmetric + symmetric.transpose()));
  const int d = static_cast<int>(symmetric.rows());
  Eigen::MatrixXd out(d, d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - j);
    for (int i = 0; i < d; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    out.col(j) = v;
  }
  return out;
}

Eigen::MatrixXd Decomposition::assemble() const {
  Eigen::MatrixXd s = volume * orientation * shape.asDiagonal() * orientation.transpose();
  return 0.5 * (s + s.transpose());
}

Decomposition decompose(const Eigen::MatrixXd& covariance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (covariance + covariance.transpose()),
                                                     Eigen::EigenvaluesOnly);
  Eigen::VectorXd eig = es.eigenvalues().reverse();
  if (eig.minCoeff() <= 0.0) throw FactorizationError("decompose: covariance is not positive definite");
  const double volume = std::exp(eig.array().log().mean());
  return {volume, eig / volume, orientation_of(covariance)};
}

}  // namespace dppm
