#pragma once

#include <span>
#include <vector>

namespace dppm {

/// Fraction of point pairs on which two partitions agree. Label values are
/// arbitrary integers.
double rand_index(std::span<const int> z1, std::span<const int> z2);

/// Confusion counts: rows are the distinct labels of `a` in increasing order,
/// columns those of `b`.
std::vector<std::vector<int>> confusion_matrix(std::span<const int> a, std::span<const int> b);

/// Maximum-weight perfect matching on a square matrix (Hungarian method).
/// Returns the column assigned to each row.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

/// Fraction of misassigned points under the best one-to-one label matching.
/// Defined only when both partitions have the same number of clusters.
double misclassification_error(std::span<const int> z_est, std::span<const int> z_true);

int cluster_count(std::span<const int> z);

}  // namespace dppm
