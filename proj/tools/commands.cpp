#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "dppm/data.hpp"
#include "dppm/evaluation.hpp"
#include "dppm/model_selection.hpp"

namespace dppm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string format_matrix(const Eigen::Matrix2d& m) {
  std::ostringstream out;
  out << std::setprecision(6) << "[[" << m(0, 0) << ", " << m(0, 1) << "], [" << m(1, 0) << ", " << m(1, 1) << "]]";
  return out.str();
}

// One label per line, or a CSV whose "label" column (else last column) holds them.
std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(trim(cell));
    rows.push_back(cells);
  }
  if (rows.empty()) throw UsageError(path.string() + " has no labels");

  std::size_t col = rows.front().size() - 1;
  bool header = false;
  const auto& first = rows.front();
  if (const auto it = std::find(first.begin(), first.end(), "label"); it != first.end()) {
    col = static_cast<std::size_t>(it - first.begin());
    header = true;
  } else {
    double v = 0.0;
    header = !(std::istringstream(first[col]) >> v);
    // A non-numeric single column is a string label unless more rows follow with the same token.
    if (header && first.size() == 1 && rows.size() > 1) {
      double w = 0.0;
      header = static_cast<bool>(std::istringstream(rows[1][0]) >> w);
    }
  }
  std::map<std::string, int> ids;
  std::vector<std::string> raw;
  for (std::size_t r = header ? 1 : 0; r < rows.size(); ++r) {
    if (col >= rows[r].size()) throw UsageError(path.string() + ": row " + std::to_string(r + 1) + " is too short");
    raw.push_back(rows[r][col]);
  }
  // Encode by sorted distinct value; the metrics only need equality.
  for (const auto& s : raw) ids.emplace(s, 0);
  int next = 0;
  for (auto& [s, id] : ids) id = next++;
  std::vector<int> out;
  for (const auto& s : raw) out.push_back(ids[s]);
  return out;
}

}  // namespace

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config " + path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<int> parse_k_range(const std::string& text) {
  std::vector<int> out;
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad K value \"" + s + "\" in \"" + text + "\"");
    }
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = to_int(trim(text.substr(0, dots))), hi = to_int(trim(text.substr(dots + 2)));
    if (hi < lo) throw UsageError("empty K range \"" + text + "\"");
    for (int k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  std::istringstream in(text);
  for (std::string part; std::getline(in, part, ',');) out.push_back(to_int(trim(part)));
  if (out.empty()) throw UsageError("no K values given");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<ModelFamily> resolve_models(const std::vector<std::string>& codes) {
  if (codes.empty()) return {kAllModels.begin(), kAllModels.end()};
  std::vector<ModelFamily> out;
  for (const auto& c : codes) {
    const auto m = parse_model(trim(c));
    if (!m) throw UsageError("unknown model \"" + c + "\"");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  return out;
}

int cmd_simulate(const SimulateArgs& args) {
  if (!(args.rho > 0.0)) throw UsageError("--rho must be positive");
  if (args.n < 2) throw UsageError("--n must be at least 2");
  if (!(args.mixing > 0.0 && args.mixing < 1.0)) throw UsageError("--mixing must lie in (0, 1)");
  RngHandle rng(args.seed);
  DataMatrix data;
  if (args.design == "bensmail") {
    data = simulate_bensmail(args.n, rng);
    std::cout << "design bensmail: mean1 (8, 8), mean2 (2, 2), cov1 4I, cov2 I\n";
  } else {
    const auto structure = parse_model(args.structure);
    if (!structure) throw UsageError("unknown structure \"" + args.structure + "\"");
    SimSpec spec;
    spec.structure = *structure;
    spec.separation = args.rho;
    spec.n = args.n;
    spec.mixing = {args.mixing, 1.0 - args.mixing};
    SimDesign design;
    try {
      design = two_component_design(spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    data = simulate_two_component(spec, rng);
    std::cout << std::setprecision(6) << "design " << args.structure << ", rho " << args.rho << "\n"
              << "mean1 (" << design.mean1(0) << ", " << design.mean1(1) << ")\n"
              << "mean2 (" << design.mean2(0) << ", " << design.mean2(1) << ")\n"
              << "cov1 " << format_matrix(design.cov1) << "\n"
              << "cov2 " << format_matrix(design.cov2) << "\n";
  }
  write_csv(data, args.out);
  std::cout << "wrote " << data.rows() << " rows to " << args.out.string() << "\n";
  return 0;
}

int cmd_compare(const fs::path& results, const std::optional<fs::path>& out) {
  const fs::path cells_dir = results / "cells";
  if (!fs::is_directory(cells_dir)) throw UsageError(results.string() + " has no cells/ directory; run fit first");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cells_dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<ModelScore> scores;
  std::vector<std::string> labels;
  for (const auto& f : files) {
    std::ifstream in(f);
    const json cell = json::parse(in);
    if (!cell.value("ok", false)) continue;
    const auto model = parse_model(cell.at("model").get<std::string>());
    if (!model) throw std::runtime_error(f.string() + ": unknown model");
    scores.push_back({*model, cell.at("best").at("K_mode").get<int>(), cell.at("best").at("log_ml").get<double>(),
                      cell.at("d").get<int>()});
  }
  if (scores.size() < 2)
    throw std::runtime_error("compare needs at least two successfully fitted cells, found " +
                             std::to_string(scores.size()));

  const Selection sel = select_model(scores);
  json report;
  report["schema_version"] = 1;
  report["command"] = "compare";
  json ranking = json::array();
  std::cout << std::left << std::setw(6) << "rank" << std::setw(12) << "model" << std::setw(5) << "K"
            << "log_ml\n";
  for (std::size_t i = 0; i < sel.ranking.size(); ++i) {
    const auto& s = sel.ranking[i];
    ranking.push_back({{"model", std::string(model_code(s.model))}, {"K", s.K}, {"log_ml", s.log_ml}});
    std::cout << std::left << std::setw(6) << i + 1 << std::setw(12) << model_code(s.model) << std::setw(5) << s.K
              << std::fixed << std::setprecision(2) << s.log_ml << "\n";
  }
  report["ranking"] = ranking;
  const auto& bf = *sel.versus_runner_up;
  report["best_vs_runner_up"] = {{"best", std::string(model_code(sel.ranking[0].model))},
                                 {"runner_up", std::string(model_code(sel.ranking[1].model))},
                                 {"two_log_bf", bf.two_log_bf},
                                 {"evidence", std::string(evidence_name(bf.evidence))}};
  std::cout << "best " << model_code(sel.ranking[0].model) << " (K=" << sel.ranking[0].K << ") vs "
            << model_code(sel.ranking[1].model) << " (K=" << sel.ranking[1].K << "): 2 log BF = " << std::fixed
            << std::setprecision(2) << bf.two_log_bf << ", " << evidence_name(bf.evidence) << "\n";

  const fs::path path = out ? *out : results / "compare.json";
  std::ofstream(path) << report.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& partition, const fs::path& truth) {
  const auto est = read_labels(partition), ref = read_labels(truth);
  if (est.size() != ref.size())
    throw UsageError("label files differ in length (" + std::to_string(est.size()) + " vs " +
                     std::to_string(ref.size()) + ")");
  if (est.size() < 2) throw UsageError("need at least two labels");
  std::cout << std::setprecision(6) << "rand_index " << rand_index(est, ref) << "\n";
  const int ke = cluster_count(est), kt = cluster_count(ref);
  if (ke == kt)
    std::cout << "misclassification_error " << misclassification_error(est, ref) << "\n";
  else
    std::cout << "misclassification_error omitted: " << ke << " estimated vs " << kt << " true clusters\n";
  return 0;
}

}  // namespace dppm::cli
