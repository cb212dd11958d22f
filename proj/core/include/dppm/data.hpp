#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dppm/models.hpp"
#include "dppm/random.hpp"

namespace dppm {

/// n x d observations, one row per point, with optional ground truth.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::optional<std::vector<int>> labels;
  std::vector<std::string> column_names;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

/// Label column selector: by header name or by zero-based column index.
using ColumnSelector = std::variant<std::string, int>;

struct CsvOptions {
  bool has_header = true;
  std::optional<ColumnSelector> label_column;
};

/// Comma-separated numeric table. Label cells may be any string. Integer
/// labels are mapped to 0, 1, ... in increasing numeric order, other strings
/// in order of first appearance.
DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes the values (and a trailing "label" column when labels are present).
void write_csv(const DataMatrix& data, const std::filesystem::path& path);

/// Per-column zero mean and unit population standard deviation.
DataMatrix standardize(const DataMatrix& data);

/// Projection on the leading principal axes of the column-centered data.
/// Axes are ordered by decreasing variance and each axis is signed so that
/// its largest-magnitude loading is positive.
DataMatrix pca_project(const DataMatrix& data, std::optional<int> n_components = std::nullopt);

/// Two-component designs with the covariance structures used for the
/// simulated benchmarks (d = 2).
struct SimSpec {
  ModelFamily structure = ModelFamily::SphericalEqual;
  double separation = 3.0;  // Mahalanobis distance between the two means
  int n = 200;
  std::vector<double> mixing{0.5, 0.5};
};

/// Generating parameters realized for a SimSpec.
struct SimDesign {
  Eigen::Vector2d mean1;
  Eigen::Vector2d mean2;
  Eigen::Matrix2d cov1;
  Eigen::Matrix2d cov2;
};

/// Covariances and means for a design; throws for unsupported structures.
SimDesign two_component_design(const SimSpec& spec);

DataMatrix simulate_two_component(const SimSpec& spec, RngHandle& rng);

/// Two spherical classes with unequal volumes: means (8,8) and (2,2),
/// covariances 4I and I, equal proportions.
DataMatrix simulate_bensmail(int n, RngHandle& rng);

}  // namespace dppm
