#include "dppm/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <stdexcept>

namespace dppm {

namespace {

std::map<int, int> index_labels(std::span<const int> z) {
  std::map<int, int> ids;
  for (int label : z) ids.emplace(label, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  return ids;
}

}  // namespace

int cluster_count(std::span<const int> z) {
  return static_cast<int>(std::set<int>(z.begin(), z.end()).size());
}

std::vector<std::vector<int>> confusion_matrix(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("confusion_matrix: partitions differ in length");
  const auto ia = index_labels(a), ib = index_labels(b);
  std::vector<std::vector<int>> m(ia.size(), std::vector<int>(ib.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) ++m[ia.at(a[i])][ib.at(b[i])];
  return m;
}

double rand_index(std::span<const int> z1, std::span<const int> z2) {
  if (z1.size() != z2.size()) throw std::invalid_argument("rand_index: partitions differ in length");
  if (z1.size() < 2) throw std::invalid_argument("rand_index: need at least two points");
  const auto m = confusion_matrix(z1, z2);
  auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };

  double both = 0.0;
  std::vector<double> rows(m.size(), 0.0), cols(m.front().size(), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < m[r].size(); ++c) {
      both += pairs(m[r][c]);
      rows[r] += m[r][c];
      cols[c] += m[r][c];
    }
  }
  double same1 = 0.0, same2 = 0.0;
  for (double r : rows) same1 += pairs(r);
  for (double c : cols) same2 += pairs(c);
  const double total = pairs(static_cast<double>(z1.size()));
  // Agreements: pairs together in both plus pairs apart in both.
  return (total + 2.0 * both - same1 - same2) / total;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const int n = static_cast<int>(weights.size());
  for (const auto& row : weights)
    if (static_cast<int>(row.size()) != n) throw std::invalid_argument("max_weight_assignment: matrix is not square");
  if (n == 0) return {};

  // Shortest augmenting path formulation on costs -w, 1-based potentials.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double misclassification_error(std::span<const int> z_est, std::span<const int> z_true) {
  if (z_est.size() != z_true.size()) throw std::invalid_argument("misclassification_error: partitions differ in length");
  if (z_est.empty()) throw std::invalid_argument("misclassification_error: empty partitions");
  const int k_est = cluster_count(z_est), k_true = cluster_count(z_true);
  if (k_est != k_true)
    throw std::invalid_argument("misclassification_error: defined only for equal cluster counts (" +
                                std::to_string(k_est) + " vs " + std::to_string(k_true) + ")");
  const auto m = confusion_matrix(z_est, z_true);
  std::vector<std::vector<double>> w(m.size(), std::vector<double>(m.size()));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m.size(); ++c) w[r][c] = m[r][c];
  const auto match = max_weight_assignment(w);
  double hits = 0.0;
  for (std::size_t r = 0; r < m.size(); ++r) hits += m[r][match[r]];
  return 1.0 - hits / static_cast<double>(z_est.size());
}

}  // namespace dppm
