#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dppm/models.hpp"

namespace dppm::cli {

/// Bad arguments; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

struct SimulateArgs {
  std::string design = "table3";  // or "bensmail"
  std::string structure = "lI";
  double rho = 3.0;
  int n = 200;
  double mixing = 0.5;  // weight of the first component
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct HyperOverrides {
  std::optional<double> kappa;
  std::optional<double> nu0;
  std::optional<double> s0_sq;
  std::optional<double> alpha_a;
  std::optional<double> alpha_b;
};

struct FitArgs {
  std::filesystem::path data;
  std::optional<std::string> label_column;
  bool no_header = false;
  bool standardize = false;
  std::optional<int> pca;
  std::string method = "dppm";
  std::vector<std::string> models;  // empty means all nine
  std::vector<int> K_values{1, 2, 3, 4, 5, 6};
  int runs = 10;
  int samples = 2000;
  int burnin = 100;
  double dirichlet_conc = 1.0;
  HyperOverrides hyper;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  int threads = 0;  // 0: available parallelism
  bool save_chain = false;
};

/// Parses "1..6", "2,3,5" or a single integer.
std::vector<int> parse_k_range(const std::string& text);

std::vector<ModelFamily> resolve_models(const std::vector<std::string>& codes);

int cmd_simulate(const SimulateArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_compare(const std::filesystem::path& results, const std::optional<std::filesystem::path>& out);
int cmd_evaluate(const std::filesystem::path& partition, const std::filesystem::path& truth);

}  // namespace dppm::cli
