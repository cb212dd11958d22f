#include "dppm/dpm_sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dppm {

std::vector<double> crp_predictive(std::span<const int> counts, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("crp_predictive: alpha must be positive");
  double total = 0.0;
  for (int c : counts) {
    if (c < 0) throw std::invalid_argument("crp_predictive: negative count");
    total += c;
  }
  std::vector<double> p;
  p.reserve(counts.size() + 1);
  for (int c : counts) p.push_back(c / (alpha + total));
  p.push_back(alpha / (alpha + total));
  return p;
}

double crp_log_prior(std::span<const int> counts, double alpha) {
  double n = 0.0, lp = 0.0;
  int K = 0;
  for (int c : counts) {
    if (c <= 0) continue;
    n += c;
    ++K;
    lp += std::lgamma(static_cast<double>(c));
  }
  return lp + K * std::log(alpha) + std::lgamma(alpha) - std::lgamma(alpha + n);
}

double alpha_mixture_weight(double a, double b, int K, int n, double eta) {
  const double odds = a + K - 1.0;
  return odds / (odds + n * (b - std::log(eta)));
}

double sample_alpha(double alpha, int K, int n, double a, double b, RngHandle& rng) {
  const double eta = sample_beta(alpha + 1.0, static_cast<double>(n), rng);
  const double rate = b - std::log(eta);
  const double w = alpha_mixture_weight(a, b, K, n, eta);
  const double shape = rng.uniform() < w ? a + K : a + K - 1.0;
  return sample_gamma(shape, 1.0 / rate, rng);
}

namespace {

// Label sweep with cached component densities.
class LabelSweep {
 public:
  LabelSweep(const Eigen::MatrixXd& x, ModelFamily model, const Hyperparams& h, GibbsState& state,
             RngHandle& rng, bool prior_only)
      : x_(x), model_(model), h_(h), st_(state), rng_(rng), prior_only_(prior_only) {
    counts_ = label_counts(st_.z, st_.K());
    rebuild();
  }

  void rebuild() {
    dens_.clear();
    for (const auto& c : st_.params.components) dens_.push_back(density(c));
  }

  void step(int i) {
    const Eigen::VectorXd xi = x_.row(i).transpose();
    const int old = st_.z[i];
    --counts_[old];

    Component aux;
    GaussianDensity aux_dens;
    if (counts_[old] == 0) {
      aux = std::move(st_.params.components[old]);
      aux_dens = std::move(dens_[old]);
      remove_cluster(old, aux);
    } else {
      aux = sample_prior_component(model_, h_, st_.params.shared, false, rng_);
      aux_dens = density(aux);
    }

    const int K = st_.K();
    log_w_.resize(K + 1);
    for (int k = 0; k < K; ++k)
      log_w_[k] = std::log(static_cast<double>(counts_[k])) + (prior_only_ ? 0.0 : dens_[k](xi));
    log_w_[K] = std::log(st_.alpha) + (prior_only_ ? 0.0 : aux_dens(xi));

    const int choice = static_cast<int>(sample_categorical(log_w_, rng_));
    if (choice == K) {
      st_.params.components.push_back(std::move(aux));
      dens_.push_back(std::move(aux_dens));
      counts_.push_back(0);
    }
    st_.z[i] = choice;
    ++counts_[choice];
  }

  const std::vector<int>& counts() const { return counts_; }
  const std::vector<GaussianDensity>& densities() const { return dens_; }

 private:
  GaussianDensity density(const Component& c) const {
    return GaussianDensity(c.mean, SpdMatrix::with_jitter(covariance_of(model_, st_.params.shared, c),
                                                          "component covariance"));
  }

  // Drops cluster k, shifting higher labels down by one.
  void remove_cluster(int k, Component& detached) {
    auto& comps = st_.params.components;
    comps.erase(comps.begin() + k);
    dens_.erase(dens_.begin() + k);
    counts_.erase(counts_.begin() + k);
    for (int& label : st_.z)
      if (label > k) --label;

    // lkDADt keeps the first component's volume at 1: move the anchor to the
    // new first component without changing any covariance.
    if (model_ == ModelFamily::GeneralScaleFree && k == 0 && !comps.empty()) {
      const double c = comps.front().volume;
      st_.params.shared.covariance *= c;
      for (auto& comp : comps) comp.volume /= c;
      comps.front().volume = 1.0;
      detached.volume /= c;
    }
  }

  const Eigen::MatrixXd& x_;
  ModelFamily model_;
  const Hyperparams& h_;
  GibbsState& st_;
  RngHandle& rng_;
  bool prior_only_;
  std::vector<int> counts_;
  std::vector<GaussianDensity> dens_;
  std::vector<double> log_w_;
};

}  // namespace

void resample_label(int i, GibbsState& state, const Eigen::MatrixXd& x, ModelFamily model,
                    const Hyperparams& h, RngHandle& rng, bool prior_only) {
  if (i < 0 || i >= static_cast<int>(state.z.size()))
    throw std::out_of_range("resample_label: point index out of range");
  LabelSweep sweep(x, model, h, state, rng, prior_only);
  sweep.step(i);
}

ChainResult run_gibbs(const Eigen::MatrixXd& x, ModelFamily model, const Hyperparams& h,
                      const GibbsOptions& options, RngHandle& rng) {
  h.validate();
  GibbsState state;
  state.z.assign(static_cast<std::size_t>(x.rows()), 0);
  state.params = sample_prior(model, h, 1, rng);
  state.alpha = options.fixed_alpha ? *options.fixed_alpha : sample_gamma(h.alpha_a, 1.0 / h.alpha_b, rng);
  return run_gibbs(x, model, h, options, std::move(state), rng);
}

ChainResult run_gibbs(const Eigen::MatrixXd& x, ModelFamily model, const Hyperparams& h,
                      const GibbsOptions& options, GibbsState state, RngHandle& rng) {
  if (!(options.n_samples > options.burn_in) || options.burn_in < 0)
    throw std::invalid_argument("run_gibbs: need n_samples > burn_in >= 0");
  if (x.rows() < 1) throw std::invalid_argument("run_gibbs: no data");
  if (x.cols() != h.dim()) throw std::invalid_argument("run_gibbs: data dimension does not match hyperparameters");
  h.validate();
  if (options.fixed_alpha) state.alpha = *options.fixed_alpha;

  const int n = static_cast<int>(x.rows());
  ChainResult chain;
  chain.model = model;
  chain.samples.reserve(static_cast<std::size_t>(options.n_samples - options.burn_in));

  LabelSweep sweep(x, model, h, state, rng, options.prior_only);
  for (int t = 0; t < options.n_samples; ++t) {
    try {
      for (int i = 0; i < n; ++i) sweep.step(i);

      const auto stats = cluster_stats(x, state.z, state.K());
      state.params = sample_posterior(model, stats, h, state.params, rng);
      sweep.rebuild();

      if (!options.fixed_alpha) state.alpha = sample_alpha(state.alpha, state.K(), n, h.alpha_a, h.alpha_b, rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("Gibbs iteration " + std::to_string(t) + " (" + std::string(model_code(model)) +
                               "): " + e.what());
    }

    if (t < options.burn_in) continue;
    double loglik = 0.0;
    const auto& dens = sweep.densities();
    for (int i = 0; i < n; ++i) loglik += dens[state.z[i]](x.row(i).transpose());

    ChainSample s;
    s.z = state.z;
    s.params = state.params;
    s.alpha = state.alpha;
    s.K = state.K();
    s.log_joint = loglik + crp_log_prior(sweep.counts(), state.alpha);
    chain.per_sample_loglik.push_back(loglik);
    chain.samples.push_back(std::move(s));
  }
  summarize_chain(chain);
  return chain;
}

}  // namespace dppm
