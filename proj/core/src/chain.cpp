#include "dppm/chain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dppm {

std::vector<int> ChainResult::K_trace() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.K);
  return out;
}

std::vector<double> ChainResult::alpha_trace() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.alpha);
  return out;
}

int posterior_mode_K(std::span<const int> K_sequence) {
  if (K_sequence.empty()) throw std::invalid_argument("posterior_mode_K: empty chain");
  std::map<int, int> freq;
  for (int k : K_sequence) ++freq[k];
  int best = 0, best_count = -1;
  for (const auto& [k, count] : freq) {  // ascending K, so ties keep the smaller
    if (count > best_count) {
      best = k;
      best_count = count;
    }
  }
  return best;
}

int posterior_mode_K(const ChainResult& chain) {
  const auto ks = chain.K_trace();
  return posterior_mode_K(ks);
}

double mode_mass(const ChainResult& chain) {
  if (chain.samples.empty()) return 0.0;
  const int mode = posterior_mode_K(chain);
  const auto hits = std::count_if(chain.samples.begin(), chain.samples.end(),
                                  [mode](const ChainSample& s) { return s.K == mode; });
  return static_cast<double>(hits) / static_cast<double>(chain.samples.size());
}

void summarize_chain(ChainResult& chain) {
  chain.K_mode = posterior_mode_K(chain);
  const ChainSample* best = nullptr;
  for (const auto& s : chain.samples) {
    if (s.K != chain.K_mode) continue;
    if (!best || s.log_joint > best->log_joint) best = &s;
  }
  chain.map_partition = best->z;
}

std::vector<int> label_counts(std::span<const int> z, int K) {
  std::vector<int> counts(K, 0);
  for (int label : z) {
    if (label < 0 || label >= K) throw std::out_of_range("label_counts: label outside 0..K-1");
    ++counts[label];
  }
  return counts;
}

namespace {

std::vector<GaussianDensity> component_densities(ModelFamily model, const MixtureParams& params) {
  std::vector<GaussianDensity> out;
  out.reserve(params.components.size());
  for (int k = 0; k < params.size(); ++k)
    out.emplace_back(params.components[k].mean,
                     SpdMatrix::with_jitter(covariance_of(model, params, k), "component covariance"));
  return out;
}

}  // namespace

double mixture_loglik(ModelFamily model, const Eigen::MatrixXd& x, const MixtureParams& params,
                      std::span<const double> weights) {
  const int K = params.size();
  if (static_cast<int>(weights.size()) != K) throw std::invalid_argument("mixture_loglik: weights size != K");
  const auto dens = component_densities(model, params);
  std::vector<double> log_w(K), terms(K);
  for (int k = 0; k < K; ++k) log_w[k] = std::log(weights[k]);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd xi = x.row(i).transpose();
    for (int k = 0; k < K; ++k) terms[k] = log_w[k] + dens[k](xi);
    total += log_sum_exp(terms);
  }
  return total;
}

double complete_loglik(ModelFamily model, const Eigen::MatrixXd& x, std::span<const int> z,
                       const MixtureParams& params) {
  const auto dens = component_densities(model, params);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += dens.at(z[i])(x.row(i).transpose());
  return total;
}

}  // namespace dppm
