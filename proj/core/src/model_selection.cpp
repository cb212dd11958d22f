#include "dppm/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dppm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool has_component_volume(ModelFamily m) {
  return m == ModelFamily::SphericalFree || m == ModelFamily::DiagonalFree ||
         m == ModelFamily::GeneralScaleFree || m == ModelFamily::GeneralOrientScaleFree;
}

bool has_orientation(ModelFamily m) {
  return m == ModelFamily::GeneralOrientFree || m == ModelFamily::GeneralOrientScaleFree;
}

class Writer {
 public:
  void push(double v) { values_.push_back(v); }

  void push_log(double v, std::string_view what) {
    if (!(v > 0.0)) throw std::domain_error("vectorize_parameters: non-positive " + std::string(what));
    const double l = std::log(v);
    values_.push_back(l);
    log_jacobian_ += l;
  }

  // Sigma = L L^T, coordinates log L_jj and L_ij (i > j), column by column.
  void push_cholesky(const Eigen::MatrixXd& sigma) {
    const SpdMatrix s = SpdMatrix::with_jitter(sigma, "covariance");
    const Eigen::MatrixXd L = s.lower();
    const int d = static_cast<int>(L.rows());
    log_jacobian_ += d * std::numbers::ln2;
    for (int j = 0; j < d; ++j) {
      const double lj = std::log(L(j, j));
      values_.push_back(lj);
      log_jacobian_ += (d - j + 1) * lj;
      for (int i = j + 1; i < d; ++i) values_.push_back(L(i, j));
    }
  }

  // Cayley coordinates of D around ref: D = ref (I - S)(I + S)^{-1}.
  void push_orientation(Eigen::MatrixXd D, const Eigen::MatrixXd& ref) {
    const int d = static_cast<int>(D.rows());
    for (int j = 0; j < d; ++j)
      if (D.col(j).dot(ref.col(j)) < 0) D.col(j) = -D.col(j);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd R = ref.transpose() * D;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(I + R);
    Eigen::MatrixXd S = lu.solve(I - R);
    S = 0.5 * (S - S.transpose());
    for (int j = 0; j < d; ++j)
      for (int i = j + 1; i < d; ++i) values_.push_back(S(i, j));

    // Haar probability on SO(d) pulled back through the Cayley map.
    double log_volume = 0.0;
    for (int k = 2; k <= d; ++k)
      log_volume += std::numbers::ln2 + 0.5 * k * std::log(std::numbers::pi) - std::lgamma(0.5 * k);
    log_jacobian_ += 0.5 * d * (d - 1) * std::numbers::ln2 - (d - 1) * std::log((I + S).determinant()) - log_volume;
  }

  ParameterCoordinates finish() {
    ParameterCoordinates out;
    out.values = Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
    out.log_jacobian = log_jacobian_;
    return out;
  }

 private:
  std::vector<double> values_;
  double log_jacobian_ = 0.0;
};

}  // namespace

std::vector<double> plugin_weights(const ChainSample& sample) {
  const int K = sample.params.size();
  if (!sample.weights.empty()) {
    if (static_cast<int>(sample.weights.size()) != K) throw std::invalid_argument("plugin_weights: weights size != K");
    return sample.weights;
  }
  const auto counts = label_counts(sample.z, K);
  std::vector<double> w(K);
  for (int k = 0; k < K; ++k) w[k] = static_cast<double>(counts[k]) / static_cast<double>(sample.z.size());
  return w;
}

ParameterCoordinates vectorize_parameters(ModelFamily model, const ChainSample& sample,
                                          const ChainSample* reference) {
  const auto& p = sample.params;
  const int K = p.size();
  if (K < 1) throw std::invalid_argument("vectorize_parameters: empty sample");
  if (sample.K != 0 && sample.K != K) throw std::invalid_argument("vectorize_parameters: K does not match components");
  if (reference && reference->params.size() != K)
    throw std::invalid_argument("vectorize_parameters: reference has a different K");

  Writer w;
  const auto weights = plugin_weights(sample);
  const double tiny = std::numeric_limits<double>::min();
  for (int k = 0; k + 1 < K; ++k)
    w.push(std::log(std::max(weights[k], tiny)) - std::log(std::max(weights[K - 1], tiny)));
  for (const auto& c : p.components)
    for (Eigen::Index j = 0; j < c.mean.size(); ++j) w.push(c.mean(j));

  switch (model) {
    case ModelFamily::SphericalEqual:
      w.push_log(p.shared.volume, "volume");
      break;
    case ModelFamily::GeneralEqual:
    case ModelFamily::GeneralScaleFree:
      w.push_cholesky(p.shared.covariance);
      break;
    case ModelFamily::DiagonalEqual:
    case ModelFamily::DiagonalFree:
    case ModelFamily::GeneralOrientFree:
    case ModelFamily::GeneralOrientScaleFree:
      for (Eigen::Index j = 0; j < p.shared.shape.size(); ++j) w.push_log(p.shared.shape(j), "shape entry");
      break;
    default:
      break;
  }
  if (has_component_volume(model)) {
    const int first = model == ModelFamily::GeneralScaleFree ? 1 : 0;  // component 0 is the unit anchor
    for (int k = first; k < K; ++k) w.push_log(p.components[k].volume, "volume");
  }
  if (has_orientation(model)) {
    for (int k = 0; k < K; ++k) {
      const auto& D = p.components[k].orientation;
      w.push_orientation(D, reference ? reference->params.components[k].orientation : D);
    }
  }
  if (model == ModelFamily::GeneralFull)
    for (const auto& c : p.components) w.push_cholesky(c.covariance);
  return w.finish();
}

Eigen::VectorXd vectorize(ModelFamily model, const ChainSample& sample, const ChainSample* reference) {
  return vectorize_parameters(model, sample, reference).values;
}

ChainSample align_labels(const ChainSample& sample, const ChainSample& reference) {
  const int K = sample.params.size();
  if (reference.params.size() != K) throw std::invalid_argument("align_labels: different K");

  struct Pair {
    double dist;
    int ref, own;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(K) * K);
  for (int r = 0; r < K; ++r)
    for (int s = 0; s < K; ++s)
      pairs.push_back({(reference.params.components[r].mean - sample.params.components[s].mean).squaredNorm(), r, s});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

  std::vector<int> source(K, -1), target(K, -1);
  for (const auto& pr : pairs) {
    if (source[pr.ref] >= 0 || target[pr.own] >= 0) continue;
    source[pr.ref] = pr.own;
    target[pr.own] = pr.ref;
  }

  ChainSample out = sample;
  for (int k = 0; k < K; ++k) {
    out.params.components[k] = sample.params.components[source[k]];
    if (!sample.weights.empty()) out.weights[k] = sample.weights[source[k]];
  }
  for (int& label : out.z) label = target[label];

  // The unit-volume anchor of lkDADt must stay on component 0; rescaling
  // Sigma_0 and all volumes together leaves every covariance unchanged.
  if (out.params.shared.covariance.size() > 0 && out.params.components.front().volume != 1.0 &&
      sample.params.components.front().volume == 1.0) {
    const double c = out.params.components.front().volume;
    out.params.shared.covariance *= c;
    for (auto& comp : out.params.components) comp.volume /= c;
    out.params.components.front().volume = 1.0;
  }
  return out;
}

MarginalLikelihoodEstimate laplace_marginal_loglik(const ChainResult& chain, ModelFamily model,
                                                   const Hyperparams& h, const Eigen::MatrixXd& x) {
  if (chain.samples.empty()) throw std::invalid_argument("laplace_marginal_loglik: empty chain");
  const int K = posterior_mode_K(chain);
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < chain.samples.size(); ++t)
    if (chain.samples[t].K == K) idx.push_back(t);

  const int dim = static_cast<int>(vectorize(model, chain.samples[idx.front()]).size());
  if (static_cast<int>(idx.size()) < dim + 1)
    throw std::runtime_error("laplace_marginal_loglik: " + std::to_string(idx.size()) + " samples at K=" +
                             std::to_string(K) + " cannot estimate a " + std::to_string(dim) +
                             "-dimensional posterior covariance; run a longer chain");

  MarginalLikelihoodEstimate est;
  est.K = K;
  est.nu_m = free_parameter_count(model, K, static_cast<int>(x.cols()));
  est.dimension = dim;
  est.n_samples = static_cast<int>(idx.size());

  double best_score = -std::numeric_limits<double>::infinity();
  double best_lik = 0.0;
  std::size_t best = idx.front();
  for (std::size_t t : idx) {
    const auto& s = chain.samples[t];
    const double lp = log_prior_density(model, s.params, h);
    if (!std::isfinite(lp)) continue;
    const double ll = mixture_loglik(model, x, s.params, plugin_weights(s));
    if (ll + lp > best_score) {
      best_score = ll + lp;
      best_lik = ll;
      best = t;
    }
  }
  if (!std::isfinite(best_score))
    throw std::runtime_error("laplace_marginal_loglik: no mode-K sample has finite posterior density");

  const ChainSample& ref = chain.samples[best];
  Eigen::MatrixXd V(static_cast<Eigen::Index>(idx.size()), dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const ChainSample aligned = align_labels(chain.samples[idx[r]], ref);
    V.row(static_cast<Eigen::Index>(r)) = vectorize(model, aligned, &ref).transpose();
  }
  const Eigen::RowVectorXd mean = V.colwise().mean();
  const Eigen::MatrixXd centered = V.rowwise() - mean;
  Eigen::MatrixXd H = centered.transpose() * centered / static_cast<double>(idx.size() - 1);
  H.diagonal().array() += 1e-10 * H.diagonal().mean();
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("laplace_marginal_loglik: posterior covariance estimate is singular");
  est.log_det_H = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

  const ParameterCoordinates theta = vectorize_parameters(model, ref, &ref);
  est.theta_hat = theta.values;
  est.theta_hat_index = best;
  est.log_lik = best_lik;
  est.log_prior = log_prior_density(model, ref.params, h) + theta.log_jacobian;
  est.log_ml = 0.5 * dim * kLog2Pi + 0.5 * est.log_det_H + est.log_lik + est.log_prior;
  if (!std::isfinite(est.log_ml)) throw std::runtime_error("laplace_marginal_loglik: estimate is not finite");
  return est;
}

std::string_view evidence_name(Evidence e) {
  switch (e) {
    case Evidence::Negative: return "Negative";
    case Evidence::NotBad: return "NotBad";
    case Evidence::Substantial: return "Substantial";
    case Evidence::Strong: return "Strong";
    case Evidence::Decisive: return "Decisive";
  }
  return "?";
}

Evidence evidence_category(double two_log_bf) {
  if (two_log_bf < 0.0) return Evidence::Negative;
  if (two_log_bf < 2.0) return Evidence::NotBad;
  if (two_log_bf < 5.0) return Evidence::Substantial;
  if (two_log_bf < 10.0) return Evidence::Strong;
  return Evidence::Decisive;
}

BayesFactorReport bayes_factor(double logml_1, double logml_2) {
  if (!std::isfinite(logml_1) || !std::isfinite(logml_2))
    throw std::invalid_argument("bayes_factor: log marginal likelihoods must be finite");
  BayesFactorReport r;
  const double diff = logml_1 - logml_2;
  r.bf = std::exp(diff);
  r.two_log_bf = 2.0 * diff;
  r.evidence = evidence_category(r.two_log_bf);
  return r;
}

Selection select_model(std::vector<ModelScore> scores) {
  if (scores.empty()) throw std::invalid_argument("select_model: no candidates");
  std::stable_sort(scores.begin(), scores.end(), [](const ModelScore& a, const ModelScore& b) {
    if (a.log_ml != b.log_ml) return a.log_ml > b.log_ml;
    return free_parameter_count(a.model, a.K, a.d) < free_parameter_count(b.model, b.K, b.d);
  });
  Selection sel;
  sel.best = scores.front();
  if (scores.size() > 1) sel.versus_runner_up = bayes_factor(scores[0].log_ml, scores[1].log_ml);
  sel.ranking = std::move(scores);
  return sel;
}

}  // namespace dppm
