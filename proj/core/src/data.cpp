#include "dppm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dppm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one record, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "load_csv: cannot parse \"" << cell << "\" as a number at line " << row << ", column " << col;
    throw std::runtime_error(msg.str());
  }
  return v;
}

// Integer labels keep their numeric order; anything else is numbered by
// first appearance.
std::vector<int> encode_labels(const std::vector<std::string>& raw) {
  std::vector<long long> as_int;
  as_int.reserve(raw.size());
  for (const auto& s : raw) {
    long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) break;
    as_int.push_back(v);
  }
  std::vector<int> out;
  out.reserve(raw.size());
  if (as_int.size() == raw.size()) {
    std::map<long long, int> ids;
    for (long long v : as_int) ids.emplace(v, 0);
    int next = 0;
    for (auto& [v, id] : ids) id = next++;
    for (long long v : as_int) out.push_back(ids[v]);
    return out;
  }
  std::map<std::string, int> ids;
  for (const auto& s : raw) out.push_back(ids.try_emplace(s, static_cast<int>(ids.size())).first->second);
  return out;
}

}  // namespace

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());

  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    records.push_back(split_record(line));
    line_numbers.push_back(line_no);
  }
  if (records.empty()) throw std::runtime_error("load_csv: " + path.string() + " is empty");

  const std::size_t width = records.front().size();
  std::vector<std::string> header;
  std::size_t first_row = 0;
  if (options.has_header) {
    header = records.front();
    first_row = 1;
  }
  if (records.size() == first_row) throw std::runtime_error("load_csv: " + path.string() + " has no data rows");

  std::optional<std::size_t> label_idx;
  if (options.label_column) {
    if (const auto* name = std::get_if<std::string>(&*options.label_column)) {
      const auto it = std::find(header.begin(), header.end(), *name);
      if (it == header.end()) throw std::runtime_error("load_csv: no column named \"" + *name + "\"");
      label_idx = static_cast<std::size_t>(it - header.begin());
    } else {
      const int idx = std::get<int>(*options.label_column);
      if (idx < 0 || static_cast<std::size_t>(idx) >= width)
        throw std::runtime_error("load_csv: label column index out of range");
      label_idx = static_cast<std::size_t>(idx);
    }
  }

  const std::size_t n = records.size() - first_row;
  const std::size_t d = width - (label_idx ? 1 : 0);
  if (d == 0) throw std::runtime_error("load_csv: no numeric columns");

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::string> raw_labels;

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[first_row + r];
    if (rec.size() != width) {
      std::ostringstream msg;
      msg << "load_csv: line " << line_numbers[first_row + r] << " has " << rec.size() << " fields, expected "
          << width;
      throw std::runtime_error(msg.str());
    }
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_idx && c == *label_idx) {
        raw_labels.push_back(trim(rec[c]));
        continue;
      }
      out.values(static_cast<Eigen::Index>(r), col++) = parse_cell(rec[c], line_numbers[first_row + r], c + 1);
    }
  }
  if (label_idx) out.labels = encode_labels(raw_labels);

  for (std::size_t c = 0; c < width; ++c) {
    if (label_idx && c == *label_idx) continue;
    out.column_names.push_back(options.has_header ? header[c] : "x" + std::to_string(out.column_names.size() + 1));
  }
  return out;
}

void write_csv(const DataMatrix& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  const int d = data.cols();
  for (int j = 0; j < d; ++j) {
    if (j) out << ',';
    out << (j < static_cast<int>(data.column_names.size()) ? data.column_names[j] : "x" + std::to_string(j + 1));
  }
  if (data.labels) out << ",label";
  out << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < d; ++j) {
      if (j) out << ',';
      out << data.values(i, j);
    }
    if (data.labels) out << ',' << (*data.labels)[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

DataMatrix standardize(const DataMatrix& data) {
  if (data.rows() < 1) throw std::invalid_argument("standardize: no rows");
  DataMatrix out = data;
  for (int j = 0; j < data.cols(); ++j) {
    auto col = out.values.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / data.rows());
    if (!(sd > 0.0)) {
      const std::string name = j < static_cast<int>(data.column_names.size()) ? data.column_names[j]
                                                                             : std::to_string(j);
      throw std::invalid_argument("standardize: column \"" + name + "\" is constant");
    }
    col /= sd;
  }
  return out;
}

DataMatrix pca_project(const DataMatrix& data, std::optional<int> n_components) {
  const int d = data.cols();
  const int m = n_components.value_or(d);
  if (m < 1 || m > d) throw std::invalid_argument("pca_project: n_components must be in 1..d");
  const Eigen::RowVectorXd mean = data.values.colwise().mean();
  const Eigen::MatrixXd centered = data.values.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max(1, data.rows() - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);

  Eigen::MatrixXd axes(d, m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    axes.col(j) = v;
  }

  DataMatrix out;
  out.values = centered * axes;
  out.labels = data.labels;
  for (int j = 0; j < m; ++j) out.column_names.push_back("PC" + std::to_string(j + 1));
  return out;
}

SimDesign two_component_design(const SimSpec& spec) {
  if (!(spec.separation > 0.0)) throw std::invalid_argument("simulate: separation must be positive");
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d A = Eigen::Vector2d(3.0, 1.0 / 3.0).asDiagonal();
  const double r = std::numbers::sqrt2 / 2.0;
  Eigen::Matrix2d D;
  D << r, -r, r, r;

  SimDesign design;
  switch (spec.structure) {
    case ModelFamily::SphericalEqual:
      design.cov1 = design.cov2 = I;
      break;
    case ModelFamily::SphericalFree:
      design.cov1 = I;
      design.cov2 = 5.0 * I;
      break;
    case ModelFamily::DiagonalEqual:
      design.cov1 = design.cov2 = A;
      break;
    case ModelFamily::DiagonalFree:
      design.cov1 = A;
      design.cov2 = 5.0 * A;
      break;
    case ModelFamily::GeneralEqual:
      design.cov1 = design.cov2 = D * A * D.transpose();
      break;
    case ModelFamily::GeneralScaleFree:
      design.cov1 = D * A * D.transpose();
      design.cov2 = 5.0 * design.cov1;
      break;
    default:
      throw std::invalid_argument("simulate: structure " + std::string(model_code(spec.structure)) +
                                  " has no two-component design");
  }

  // Shift along the leading axis of the pooled covariance so the
  // Mahalanobis distance under that covariance equals the separation.
  const Eigen::Matrix2d pooled = 0.5 * (design.cov1 + design.cov2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(pooled);
  Eigen::Vector2d u = es.eigenvectors().col(1);
  if (u(0) < 0 || (u(0) == 0 && u(1) < 0)) u = -u;
  const double quad = u.dot(pooled.ldlt().solve(u));
  design.mean1 = Eigen::Vector2d::Zero();
  design.mean2 = spec.separation / std::sqrt(quad) * u;
  return design;
}

namespace {

DataMatrix draw_two_class(int n, const std::vector<double>& mixing, const Eigen::Vector2d& m1,
                          const Eigen::Matrix2d& c1, const Eigen::Vector2d& m2, const Eigen::Matrix2d& c2,
                          RngHandle& rng) {
  if (n < 2) throw std::invalid_argument("simulate: n must be at least 2");
  if (mixing.size() != 2 || !(mixing[0] > 0) || !(mixing[1] > 0) || std::abs(mixing[0] + mixing[1] - 1.0) > 1e-9)
    throw std::invalid_argument("simulate: mixing must be two positive proportions summing to 1");
  const SpdMatrix s1(c1, "cov1"), s2(c2, "cov2");
  DataMatrix out;
  out.values.resize(n, 2);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform() < mixing[0] ? 0 : 1;
    labels[i] = k;
    out.values.row(i) = (k == 0 ? sample_mvn(m1, s1, rng) : sample_mvn(m2, s2, rng)).transpose();
  }
  out.labels = std::move(labels);
  out.column_names = {"x1", "x2"};
  return out;
}

}  // namespace

DataMatrix simulate_two_component(const SimSpec& spec, RngHandle& rng) {
  const SimDesign g = two_component_design(spec);
  return draw_two_class(spec.n, spec.mixing, g.mean1, g.cov1, g.mean2, g.cov2, rng);
}

DataMatrix simulate_bensmail(int n, RngHandle& rng) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  return draw_two_class(n, {0.5, 0.5}, Eigen::Vector2d(8, 8), 4.0 * I, Eigen::Vector2d(2, 2), I, rng);
}

}  // namespace dppm
