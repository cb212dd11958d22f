#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cli.hpp"

namespace {

std::uint64_t env_seed() {
  if (const char* s = std::getenv("DPPM_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw dppm::cli::UsageError(std::string("DPPM_SEED is not an unsigned integer: ") + s);
    }
  }
  return 0;
}

template <typename T>
void from_config(const std::map<std::string, std::string>& cfg, const std::string& key, const CLI::Option* flag,
                 T& target) {
  if (flag->count() > 0) return;
  const auto it = cfg.find(key);
  if (it == cfg.end()) return;
  std::istringstream in(it->second);
  T value{};
  if (!(in >> value) || !(in >> std::ws).eof())
    throw dppm::cli::UsageError("config: cannot parse " + key + " = " + it->second);
  target = value;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dppm::cli;
  CLI::App app{"Dirichlet process parsimonious Gaussian mixtures"};
  app.require_subcommand(1);

  SimulateArgs sim;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Draw a two-component benchmark data set");
  simulate->add_option("--design", sim.design, "table3 or bensmail")->check(CLI::IsMember({"table3", "bensmail"}));
  simulate->add_option("--structure", sim.structure, "Covariance structure of the table3 design");
  simulate->add_option("--rho", sim.rho, "Mahalanobis separation");
  simulate->add_option("--n", sim.n, "Sample size");
  simulate->add_option("--mixing", sim.mixing, "Proportion of the first component");
  simulate->add_option("--seed", sim_seed, "Seed (default: DPPM_SEED or 0)");
  simulate->add_option("--out", sim.out, "Output CSV")->required();

  FitArgs fit;
  std::optional<std::uint64_t> fit_seed;
  std::string k_text = "1..6";
  std::filesystem::path config;
  auto* fit_cmd = app.add_subcommand("fit", "Fit DPPM or finite (PGMM) mixtures and estimate marginal likelihoods");
  fit_cmd->add_option("--data", fit.data, "Input CSV")->required();
  fit_cmd->add_option("--label-column", fit.label_column, "Ground-truth column name, excluded from the features");
  fit_cmd->add_flag("--no-header", fit.no_header, "The CSV has no header row");
  fit_cmd->add_flag("--standardize", fit.standardize, "Standardize the columns (after PCA when both are set)");
  fit_cmd->add_option("--pca", fit.pca, "Project on this many principal axes");
  auto* o_method = fit_cmd->add_option("--method", fit.method, "dppm or pgmm")->check(CLI::IsMember({"dppm", "pgmm"}));
  auto* o_models = fit_cmd->add_option("--models", fit.models, "Model codes (default: all nine)")->delimiter(',');
  auto* o_k = fit_cmd->add_option("--K", k_text, "Component counts for pgmm, e.g. 1..6 or 2,3");
  auto* o_runs = fit_cmd->add_option("--runs", fit.runs, "Chains per cell; the best log-ML is kept");
  auto* o_samples = fit_cmd->add_option("--samples", fit.samples, "Gibbs iterations per chain");
  auto* o_burnin = fit_cmd->add_option("--burnin", fit.burnin, "Discarded leading iterations");
  auto* o_conc = fit_cmd->add_option("--dirichlet-conc", fit.dirichlet_conc, "Dirichlet concentration (pgmm)");
  auto* o_kappa = fit_cmd->add_option("--kappa", fit.hyper.kappa, "Prior mean shrinkage kappa_n");
  auto* o_nu0 = fit_cmd->add_option("--nu0", fit.hyper.nu0, "Prior degrees of freedom");
  auto* o_s0 = fit_cmd->add_option("--s0-sq", fit.hyper.s0_sq, "Prior scale of volumes and shapes");
  auto* o_aa = fit_cmd->add_option("--alpha-a", fit.hyper.alpha_a, "Gamma shape of the DP concentration");
  auto* o_ab = fit_cmd->add_option("--alpha-b", fit.hyper.alpha_b, "Gamma rate of the DP concentration");
  auto* o_seed = fit_cmd->add_option("--seed", fit_seed, "Master seed (default: config, DPPM_SEED or 0)");
  fit_cmd->add_option("--config", config, "key = value file; flags take precedence")->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0: all cores)");
  fit_cmd->add_flag("--save-chain", fit.save_chain, "Write every chain's flattened parameters");

  std::filesystem::path results;
  std::optional<std::filesystem::path> compare_out;
  auto* compare = app.add_subcommand("compare", "Rank fitted cells by log-ML and report Bayes factors");
  compare->add_option("results", results, "Directory written by fit")->required();
  compare->add_option("--out", compare_out, "JSON report path (default: <results>/compare.json)");

  std::filesystem::path partition, truth;
  auto* evaluate = app.add_subcommand("evaluate", "Rand index and misclassification error of a partition");
  evaluate->add_option("partition", partition, "Estimated labels")->required()->check(CLI::ExistingFile);
  evaluate->add_option("truth", truth, "True labels")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      sim.seed = sim_seed ? *sim_seed : env_seed();
      return cmd_simulate(sim);
    }
    if (*fit_cmd) {
      std::uint64_t seed = fit_seed ? *fit_seed : env_seed();
      if (!config.empty()) {
        const auto cfg = read_config(config);
        static const std::set<std::string> known{"method", "models", "K", "runs", "samples", "burnin",
                                                 "dirichlet_conc", "kappa", "nu0", "s0_sq", "alpha_a", "alpha_b",
                                                 "seed"};
        for (const auto& [key, value] : cfg)
          if (!known.count(key)) throw UsageError("config: unknown key \"" + key + "\"");
        from_config(cfg, "method", o_method, fit.method);
        from_config(cfg, "K", o_k, k_text);
        from_config(cfg, "runs", o_runs, fit.runs);
        from_config(cfg, "samples", o_samples, fit.samples);
        from_config(cfg, "burnin", o_burnin, fit.burnin);
        from_config(cfg, "dirichlet_conc", o_conc, fit.dirichlet_conc);
        double v = 0.0;
        auto optional_from = [&](const std::string& key, const CLI::Option* flag, std::optional<double>& target) {
          if (flag->count() > 0 || !cfg.count(key)) return;
          from_config(cfg, key, flag, v);
          target = v;
        };
        optional_from("kappa", o_kappa, fit.hyper.kappa);
        optional_from("nu0", o_nu0, fit.hyper.nu0);
        optional_from("s0_sq", o_s0, fit.hyper.s0_sq);
        optional_from("alpha_a", o_aa, fit.hyper.alpha_a);
        optional_from("alpha_b", o_ab, fit.hyper.alpha_b);
        if (o_models->count() == 0 && cfg.count("models")) {
          fit.models.clear();
          std::istringstream in(cfg.at("models"));
          for (std::string code; std::getline(in, code, ',');)
            if (!code.empty()) fit.models.push_back(code);
        }
        if (!fit_seed && cfg.count("seed")) from_config(cfg, "seed", o_seed, seed);
        if (fit.method != "dppm" && fit.method != "pgmm") throw UsageError("config: method must be dppm or pgmm");
      }
      fit.seed = seed;
      fit.K_values = parse_k_range(k_text);
      return cmd_fit(fit);
    }
    if (*compare) return cmd_compare(results, compare_out);
    if (*evaluate) return cmd_evaluate(partition, truth);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
