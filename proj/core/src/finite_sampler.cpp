#include "dppm/finite_sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dppm {

namespace {

std::vector<GaussianDensity> densities(ModelFamily model, const MixtureParams& params) {
  std::vector<GaussianDensity> out;
  out.reserve(params.components.size());
  for (int k = 0; k < params.size(); ++k)
    out.emplace_back(params.components[k].mean,
                     SpdMatrix::with_jitter(covariance_of(model, params, k), "component covariance"));
  return out;
}

}  // namespace

std::vector<double> class_probabilities(const Eigen::VectorXd& x, ModelFamily model, const FiniteState& state) {
  const auto dens = densities(model, state.params);
  std::vector<double> logp(dens.size());
  for (std::size_t k = 0; k < dens.size(); ++k) logp[k] = std::log(state.pi[k]) + dens[k](x);
  const double norm = log_sum_exp(logp);
  for (double& v : logp) v = std::exp(v - norm);
  return logp;
}

ChainResult run_finite_gibbs(const Eigen::MatrixXd& x, ModelFamily model, int K, const Hyperparams& h,
                             const FiniteOptions& options, RngHandle& rng) {
  if (K < 1) throw std::invalid_argument("run_finite_gibbs: K must be positive");
  if (!(options.dirichlet_conc > 0.0)) throw std::invalid_argument("run_finite_gibbs: Dirichlet concentration must be positive");
  if (!(options.n_samples > options.burn_in) || options.burn_in < 0)
    throw std::invalid_argument("run_finite_gibbs: need n_samples > burn_in >= 0");
  if (x.cols() != h.dim()) throw std::invalid_argument("run_finite_gibbs: data dimension does not match hyperparameters");

  const int n = static_cast<int>(x.rows());
  FiniteState st;
  st.params = sample_prior(model, h, K, rng);
  st.pi.assign(K, 1.0 / K);
  st.z.assign(n, 0);

  ChainResult chain;
  chain.model = model;
  chain.samples.reserve(static_cast<std::size_t>(options.n_samples - options.burn_in));

  std::vector<double> logp(K), conc(K);
  for (int t = 0; t < options.n_samples; ++t) {
    double loglik = 0.0, log_pi_z = 0.0;
    std::vector<GaussianDensity> dens;
    try {
      dens = densities(model, st.params);
      std::vector<double> log_pi(K);
      for (int k = 0; k < K; ++k) log_pi[k] = std::log(st.pi[k]);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = x.row(i).transpose();
        for (int k = 0; k < K; ++k) logp[k] = log_pi[k] + dens[k](xi);
        st.z[i] = static_cast<int>(sample_categorical(logp, rng));
      }

      const auto counts = label_counts(st.z, K);
      for (int k = 0; k < K; ++k) conc[k] = options.dirichlet_conc / K + counts[k];
      st.pi = sample_dirichlet(conc, rng);

      st.params = sample_posterior(model, cluster_stats(x, st.z, K), h, st.params, rng);
      if (t < options.burn_in) continue;

      dens = densities(model, st.params);
      for (int i = 0; i < n; ++i) {
        loglik += dens[st.z[i]](x.row(i).transpose());
        log_pi_z += std::log(st.pi[st.z[i]]);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("finite Gibbs iteration " + std::to_string(t) + " (" +
                               std::string(model_code(model)) + ", K=" + std::to_string(K) + "): " + e.what());
    }

    ChainSample s;
    s.z = st.z;
    s.params = st.params;
    s.weights = st.pi;
    s.K = K;
    s.log_joint = loglik + log_pi_z;
    chain.per_sample_loglik.push_back(loglik);
    chain.samples.push_back(std::move(s));
  }
  summarize_chain(chain);
  return chain;
}

}  // namespace dppm
