#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "cli.hpp"
#include "dppm/data.hpp"
#include "dppm/dpm_sampler.hpp"
#include "dppm/evaluation.hpp"
#include "dppm/finite_sampler.hpp"
#include "dppm/model_selection.hpp"

namespace dppm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Cell {
  ModelFamily model;
  int K = 0;  // 0 for DP cells
  std::string name;
};

struct RunResult {
  bool ok = false;
  std::string error;
  double log_ml = 0.0;
  int K_mode = 0;
  double mode_mass = 0.0;
  int nu_m = 0;
  int dimension = 0;
  double log_det_H = 0.0;
  double log_lik = 0.0;
  double log_prior = 0.0;
  std::vector<int> map_partition;
  std::map<int, int> K_counts;
  std::vector<double> alpha;
};

std::size_t model_index(ModelFamily m) {
  return static_cast<std::size_t>(std::find(kAllModels.begin(), kAllModels.end(), m) - kAllModels.begin());
}

// Stable across model subsets and thread counts.
std::uint64_t stream_index(const Cell& c, int run) {
  return (model_index(c.model) * 1000 + static_cast<std::uint64_t>(c.K)) * 100000 + static_cast<std::uint64_t>(run);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json alpha_summary(std::vector<double> a) {
  if (a.empty()) return nullptr;
  double mean = 0.0, var = 0.0;
  for (double v : a) mean += v / a.size();
  for (double v : a) var += (v - mean) * (v - mean) / a.size();
  std::sort(a.begin(), a.end());
  auto q = [&](double p) { return a[static_cast<std::size_t>(p * (a.size() - 1))]; };
  return {{"mean", mean}, {"sd", std::sqrt(var)}, {"q025", q(0.025)}, {"median", q(0.5)}, {"q975", q(0.975)}};
}

void write_chain(const fs::path& path, ModelFamily model, const ChainResult& chain) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17) << "iter,K,alpha,log_joint,coord,value\n";
  for (std::size_t t = 0; t < chain.samples.size(); ++t) {
    const auto& s = chain.samples[t];
    const Eigen::VectorXd v = vectorize(model, s);
    for (Eigen::Index j = 0; j < v.size(); ++j)
      out << t << "," << s.K << "," << s.alpha << "," << s.log_joint << "," << j << "," << v(j) << "\n";
  }
}

RunResult run_one(const Cell& cell, int run, const FitArgs& args, const Eigen::MatrixXd& x, const Hyperparams& h) {
  RunResult r;
  RngHandle rng = RngHandle::derive(args.seed, stream_index(cell, run));
  try {
    ChainResult chain;
    if (cell.K == 0) {
      GibbsOptions opt;
      opt.n_samples = args.samples;
      opt.burn_in = args.burnin;
      chain = run_gibbs(x, cell.model, h, opt, rng);
      r.alpha = chain.alpha_trace();
    } else {
      FiniteOptions opt;
      opt.n_samples = args.samples;
      opt.burn_in = args.burnin;
      opt.dirichlet_conc = args.dirichlet_conc;
      chain = run_finite_gibbs(x, cell.model, cell.K, h, opt, rng);
    }
    if (args.save_chain) write_chain(args.out / "chains" / (cell.name + "_run" + std::to_string(run) + ".csv"), cell.model, chain);
    for (int k : chain.K_trace()) ++r.K_counts[k];
    r.K_mode = chain.K_mode;
    r.mode_mass = mode_mass(chain);
    r.map_partition = chain.map_partition;
    const auto est = laplace_marginal_loglik(chain, cell.model, h, x);
    r.log_ml = est.log_ml;
    r.nu_m = est.nu_m;
    r.dimension = est.dimension;
    r.log_det_H = est.log_det_H;
    r.log_lik = est.log_lik;
    r.log_prior = est.log_prior;
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

Hyperparams build_hyper(const Eigen::MatrixXd& x, const HyperOverrides& o) {
  Hyperparams h = Hyperparams::from_data(x);
  if (o.kappa) h.kappa_n = *o.kappa;
  if (o.nu0) h.nu0 = *o.nu0;
  if (o.s0_sq) h.s0_sq = *o.s0_sq;
  if (o.alpha_a) h.alpha_a = *o.alpha_a;
  if (o.alpha_b) h.alpha_b = *o.alpha_b;
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return h;
}

}  // namespace

int cmd_fit(const FitArgs& args) {
  if (args.runs < 1) throw UsageError("--runs must be at least 1");
  if (args.burnin < 0 || args.samples <= args.burnin) throw UsageError("need --samples > --burnin >= 0");
  if (!(args.dirichlet_conc > 0.0)) throw UsageError("--dirichlet-conc must be positive");
  if (args.threads < 0) throw UsageError("--threads must be non-negative");
  const auto models = resolve_models(args.models);

  CsvOptions csv;
  csv.has_header = !args.no_header;
  if (args.label_column) csv.label_column = *args.label_column;
  DataMatrix data = load_csv(args.data, csv);
  if (args.pca) {
    if (*args.pca < 1 || *args.pca > data.cols()) throw UsageError("--pca must be between 1 and the data dimension");
    data = pca_project(data, *args.pca);
  }
  if (args.standardize) data = standardize(data);
  const Eigen::MatrixXd& x = data.values;
  const Hyperparams h = build_hyper(x, args.hyper);

  std::vector<Cell> cells;
  for (auto m : models) {
    if (args.method == "dppm") {
      cells.push_back({m, 0, std::string(model_code(m))});
    } else {
      for (int K : args.K_values) cells.push_back({m, K, std::string(model_code(m)) + "_K" + std::to_string(K)});
    }
  }

  fs::create_directories(args.out / "cells");
  if (args.save_chain) fs::create_directories(args.out / "chains");

  const std::size_t n_tasks = cells.size() * static_cast<std::size_t>(args.runs);
  std::vector<RunResult> results(n_tasks);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(args.threads > 0 ? args.threads : hw, n_tasks);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::size_t finished = 0;
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < n_tasks;) {
      const Cell& cell = cells[t / args.runs];
      const int run = static_cast<int>(t % args.runs);
      results[t] = run_one(cell, run, args, x, h);
      std::lock_guard lock(log_mutex);
      ++finished;
      std::cerr << "[" << finished << "/" << n_tasks << "] " << cell.name << " run " << run << ": "
                << (results[t].ok ? "log_ml " + std::to_string(results[t].log_ml) : "failed: " + results[t].error)
                << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  json summary_cells = json::array();
  std::vector<ModelScore> scores;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    json runs = json::array();
    int best = -1;
    for (int r = 0; r < args.runs; ++r) {
      const RunResult& rr = results[c * args.runs + r];
      json jr = {{"run", r}, {"ok", rr.ok}};
      if (rr.ok) {
        jr["log_ml"] = rr.log_ml;
        jr["K_mode"] = rr.K_mode;
        jr["mode_mass"] = rr.mode_mass;
        if (best < 0 || rr.log_ml > results[c * args.runs + best].log_ml) best = r;
      } else {
        jr["error"] = rr.error;
      }
      runs.push_back(jr);
    }

    json jc = {{"schema_version", 1}, {"model", std::string(model_code(cell.model))}, {"method", args.method},
               {"d", data.cols()}, {"n", data.rows()}, {"runs", runs}, {"ok", best >= 0}};
    if (cell.K > 0) jc["K"] = cell.K;
    json brief = {{"model", std::string(model_code(cell.model))}, {"ok", best >= 0}};
    if (cell.K > 0) brief["K"] = cell.K;
    if (best >= 0) {
      const RunResult& b = results[c * args.runs + best];
      json jb = {{"run", best},        {"log_ml", b.log_ml},       {"K_mode", b.K_mode},
                 {"mode_mass", b.mode_mass}, {"nu_m", b.nu_m},         {"dimension", b.dimension},
                 {"log_det_H", b.log_det_H}, {"log_lik", b.log_lik},   {"log_prior", b.log_prior},
                 {"map_partition", b.map_partition}};
      json kd = json::object();
      for (const auto& [k, cnt] : b.K_counts) kd[std::to_string(k)] = static_cast<double>(cnt) / (args.samples - args.burnin);
      jb["K_distribution"] = kd;
      if (cell.K == 0) jb["alpha"] = alpha_summary(b.alpha);
      brief["log_ml"] = b.log_ml;
      brief["K_mode"] = b.K_mode;
      brief["mode_mass"] = b.mode_mass;
      brief["nu_m"] = b.nu_m;
      if (data.labels) {
        const double ri = rand_index(b.map_partition, *data.labels);
        jb["rand_index"] = ri;
        brief["rand_index"] = ri;
        if (cluster_count(b.map_partition) == cluster_count(*data.labels)) {
          const double err = misclassification_error(b.map_partition, *data.labels);
          jb["misclassification_error"] = err;
          brief["misclassification_error"] = err;
        } else {
          jb["misclassification_error"] = nullptr;
          brief["misclassification_error"] = nullptr;
        }
      }
      jc["best"] = jb;
      scores.push_back({cell.model, b.K_mode, b.log_ml, static_cast<int>(data.cols())});
    } else {
      brief["error"] = results[c * args.runs].error;
    }
    summary_cells.push_back(brief);
    std::ofstream(args.out / "cells" / (cell.name + ".json")) << jc.dump(2) << "\n";
  }

  json hyper = {{"mu0", std::vector<double>(h.mu0.data(), h.mu0.data() + h.mu0.size())},
                {"kappa_n", h.kappa_n},
                {"nu0", h.nu0},
                {"Lambda0", matrix_json(h.Lambda0)},
                {"s0_sq", h.s0_sq},
                {"alpha_a", h.alpha_a},
                {"alpha_b", h.alpha_b}};
  if (args.method == "pgmm") hyper["dirichlet_conc"] = args.dirichlet_conc;
  json summary = {{"schema_version", 1},
                  {"command", "fit"},
                  {"method", args.method},
                  {"data", args.data.string()},
                  {"n", data.rows()},
                  {"d", data.cols()},
                  {"preprocessing", {{"pca", args.pca ? json(*args.pca) : json(nullptr)}, {"standardize", args.standardize}}},
                  {"seed", args.seed},
                  {"runs", args.runs},
                  {"samples", args.samples},
                  {"burnin", args.burnin},
                  {"hyperparameters", hyper},
                  {"cells", summary_cells}};
  if (!scores.empty()) {
    const Selection sel = select_model(scores);
    json js = {{"best", std::string(model_code(sel.best.model))}, {"K", sel.best.K}, {"log_ml", sel.best.log_ml}};
    if (sel.versus_runner_up) {
      js["runner_up"] = std::string(model_code(sel.ranking[1].model));
      js["runner_up_K"] = sel.ranking[1].K;
      js["two_log_bf"] = sel.versus_runner_up->two_log_bf;
      js["evidence"] = std::string(evidence_name(sel.versus_runner_up->evidence));
    }
    summary["selection"] = js;
  }
  std::ofstream(args.out / "summary.json") << summary.dump(2) << "\n";

  // Plot-ready table: one row per model.
  std::ofstream csv_out(args.out / "summary.csv");
  csv_out << std::setprecision(10);
  if (args.method == "dppm") {
    csv_out << "model,K_hat,log_ml" << (data.labels ? ",rand_index,misclassification_error" : "") << "\n";
    for (const auto& c : summary_cells) {
      csv_out << c["model"].get<std::string>();
      if (c["ok"].get<bool>()) {
        csv_out << "," << c["K_mode"].get<int>() << "," << c["log_ml"].get<double>();
        if (data.labels) {
          csv_out << "," << c["rand_index"].get<double>() << ",";
          if (!c["misclassification_error"].is_null()) csv_out << c["misclassification_error"].get<double>();
        }
      } else {
        csv_out << ",FAILED,FAILED" << (data.labels ? ",FAILED,FAILED" : "");
      }
      csv_out << "\n";
    }
  } else {
    csv_out << "model";
    for (int K : args.K_values) csv_out << ",K=" << K;
    csv_out << "\n";
    std::size_t i = 0;
    for (auto m : models) {
      csv_out << model_code(m);
      for (std::size_t k = 0; k < args.K_values.size(); ++k, ++i) {
        const auto& c = summary_cells[i];
        csv_out << ",";
        if (c["ok"].get<bool>())
          csv_out << c["log_ml"].get<double>();
        else
          csv_out << "FAILED";
      }
      csv_out << "\n";
    }
  }

  std::cout << std::left << std::setw(16) << "cell" << std::setw(6) << "K" << std::setw(14) << "log_ml"
            << "mode_mass\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& s = summary_cells[c];
    std::cout << std::left << std::setw(16) << cells[c].name;
    if (s["ok"].get<bool>())
      std::cout << std::setw(6) << s["K_mode"].get<int>() << std::setw(14) << std::fixed << std::setprecision(2)
                << s["log_ml"].get<double>() << std::setprecision(3) << s["mode_mass"].get<double>() << "\n";
    else
      std::cout << "FAILED\n";
  }
  if (summary.contains("selection")) {
    const auto& sel = summary["selection"];
    std::cout << "selected " << sel["best"].get<std::string>() << " with K=" << sel["K"].get<int>();
    if (sel.contains("two_log_bf"))
      std::cout << "; 2 log BF vs " << sel["runner_up"].get<std::string>() << " = " << std::setprecision(2)
                << sel["two_log_bf"].get<double>() << " (" << sel["evidence"].get<std::string>() << ")";
    std::cout << "\n";
  }
  if (scores.empty()) {
    std::cerr << "error: every cell failed\n";
    return 1;
  }
  return 0;
}

}  // namespace dppm::cli
