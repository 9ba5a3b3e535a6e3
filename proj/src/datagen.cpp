#include "digmix/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "digmix/errors.hpp"

namespace digmix {

std::string to_string(Family family) {
  switch (family) {
    case Family::miller_harrison:
      return "miller";
    case Family::motivating5:
      return "motivating5";
    case Family::misspec4:
      return "misspec4";
  }
  return "unknown";
}

void SyntheticSpec::validate() const {
  if (d < 1) {
    throw UsageError("dimension must be at least 1");
  }
  if (family != Family::miller_harrison && d != 2) {
    throw UsageError(to_string(family) + " is defined for d = 2 only");
  }
  if (n < true_K()) {
    throw UsageError("n must be at least the number of generating clusters");
  }
}

std::size_t SyntheticSpec::true_K() const {
  switch (family) {
    case Family::miller_harrison:
      return 3;
    case Family::motivating5:
      return 5;
    case Family::misspec4:
      return 4;
  }
  return 0;
}

namespace {

// Draws labels from the weights, then x = mean + L * standard normal.
Dataset sample_mixture(std::size_t n, const std::vector<double>& weights,
                       const std::vector<Vector>& means, const std::vector<Eigen::MatrixXd>& chol,
                       Rng& rng) {
  const std::size_t d = static_cast<std::size_t>(means.front().size());
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Labels labels(n);
  Vector e(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.categorical(weights);
    labels[i] = static_cast<int>(k);
    for (auto& v : e) v = rng.normal();
    out.x.row(static_cast<Eigen::Index>(i)) = (means[k] + chol[k] * e).transpose();
  }
  out.labels = std::move(labels);
  return out;
}

}  // namespace

Dataset gen_miller_harrison(std::size_t n, std::size_t d, Rng& rng) {
  if (n < 3 || d < 1) {
    throw UsageError("Miller-Harrison data needs n >= 3 and d >= 1");
  }
  const auto dd = static_cast<Eigen::Index>(d);
  const double c = 3.0 / std::sqrt(static_cast<double>(d));
  std::vector<Vector> means{Vector::Constant(dd, -c), Vector::Zero(dd), Vector::Constant(dd, c)};
  std::vector<Eigen::MatrixXd> chol(3, Eigen::MatrixXd::Identity(dd, dd));
  return sample_mixture(n, {1.0 / 3, 1.0 / 3, 1.0 / 3}, means, chol, rng);
}

Dataset gen_motivating5(std::size_t n, Rng& rng) {
  if (n < 5) {
    throw UsageError("motivating data needs n >= 5");
  }
  std::vector<Vector> means;
  for (double c : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
    means.push_back(Vector::Constant(2, c));
  }
  std::vector<Eigen::MatrixXd> chol(5, Eigen::MatrixXd::Identity(2, 2));
  return sample_mixture(n, std::vector<double>(5, 0.2), means, chol, rng);
}

Eigen::Matrix2d misspec4_rotated_covariance() {
  const double a = std::numbers::pi / 4.0;
  Eigen::Matrix2d R;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R * Eigen::Vector2d(2.5, 0.2).asDiagonal() * R.transpose();
}

Dataset gen_misspec4(std::size_t n, Rng& rng) {
  if (n < 4) {
    throw UsageError("misspecified data needs n >= 4");
  }
  std::vector<Vector> means(4, Vector(2));
  means[0] << 4, 4;
  means[1] << 7, 4;
  means[2] << 6, 2;
  means[3] << 8, 10;
  std::vector<Eigen::Matrix2d> cov(4);
  cov[0] = Eigen::Matrix2d::Identity();
  cov[1] = misspec4_rotated_covariance();
  cov[2] = Eigen::Vector2d(3.0, 0.1).asDiagonal();
  cov[3] = Eigen::Vector2d(0.1, 0.1).asDiagonal();
  std::vector<Eigen::MatrixXd> chol;
  for (const auto& s : cov) {
    chol.emplace_back(Eigen::MatrixXd(s.llt().matrixL()));
  }
  return sample_mixture(n, {0.44, 0.3, 0.25, 0.01}, means, chol, rng);
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  switch (spec.family) {
    case Family::miller_harrison:
      return gen_miller_harrison(spec.n, spec.d, rng);
    case Family::motivating5:
      return gen_motivating5(spec.n, rng);
    case Family::misspec4:
      return gen_misspec4(spec.n, rng);
  }
  throw UsageError("unknown family");
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& cell) {
  const std::string text = trim(cell);
  if (text.empty()) {
    return std::nullopt;
  }
  const char* first = text.data();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

std::ifstream open_csv(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw CsvError(CsvError::Kind::missing_file, "no such file: " + path);
  }
  std::ifstream in(path);
  if (!in) {
    throw CsvError(CsvError::Kind::missing_file, "cannot open " + path);
  }
  return in;
}

bool next_line(std::ifstream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return true;
  }
  return false;
}

}  // namespace

bool csv_has_header(const std::string& path) {
  auto in = open_csv(path);
  std::string line;
  if (!next_line(in, line)) {
    throw CsvError(CsvError::Kind::empty, "empty file: " + path);
  }
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  for (const auto& cell : split_row(line)) {
    if (!parse_number(cell)) return true;
  }
  return false;
}

Dataset load_csv(const std::string& path, bool has_header,
                 const std::optional<LabelColumn>& label_column) {
  auto in = open_csv(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  if (has_header) {
    if (!next_line(in, line)) {
      throw CsvError(CsvError::Kind::empty, "empty file: " + path);
    }
    ++line_no;
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    for (auto& cell : split_row(line)) header.push_back(trim(cell));
  }

  std::optional<std::size_t> label_index;
  if (label_column) {
    if (const auto* name = std::get_if<std::string>(&*label_column)) {
      const auto it = std::find(header.begin(), header.end(), *name);
      if (it == header.end()) {
        throw CsvError(CsvError::Kind::bad_label, "label column '" + *name + "' not in header");
      }
      label_index = static_cast<std::size_t>(it - header.begin());
    } else {
      label_index = std::get<std::size_t>(*label_column);
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> raw_labels;
  std::size_t width = header.empty() ? 0 : header.size();
  while (next_line(in, line)) {
    ++line_no;
    const auto cells = split_row(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw CsvError(CsvError::Kind::ragged_row, "row " + std::to_string(line_no) + " has " +
                                                     std::to_string(cells.size()) +
                                                     " cells, expected " + std::to_string(width));
    }
    if (label_index && *label_index >= width) {
      throw CsvError(CsvError::Kind::bad_label, "label column index out of range");
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw CsvError(CsvError::Kind::non_numeric, "row " + std::to_string(line_no) +
                                                        ", column " + std::to_string(c + 1) +
                                                        ": cannot parse '" + trim(cells[c]) + "'");
      }
      if (!std::isfinite(*v)) {
        throw CsvError(CsvError::Kind::non_finite, "row " + std::to_string(line_no) +
                                                       ", column " + std::to_string(c + 1) +
                                                       ": value is not finite");
      }
      if (label_index && c == *label_index) {
        raw_labels.push_back(*v);
      } else {
        values.push_back(*v);
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty() || rows.front().empty()) {
    throw CsvError(CsvError::Kind::empty, "no numeric data in " + path);
  }

  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  if (label_index) {
    std::set<long long> distinct;
    Labels labels;
    for (double v : raw_labels) {
      if (v != std::round(v)) {
        throw CsvError(CsvError::Kind::bad_label, "label values must be integers");
      }
      labels.push_back(static_cast<int>(v));
      distinct.insert(static_cast<long long>(v));
    }
    const long long lo = *distinct.begin();
    const long long hi = *distinct.rbegin();
    if ((lo != 0 && lo != 1) || hi - lo + 1 != static_cast<long long>(distinct.size())) {
      throw CsvError(CsvError::Kind::bad_label,
                     "labels must form a contiguous range starting at 0 or 1");
    }
    for (auto& l : labels) l -= static_cast<int>(lo);
    data.labels = std::move(labels);
  }
  return data;
}

std::pair<Dataset, ColumnTransform> standardize(const Dataset& data) {
  const auto n = static_cast<double>(data.n());
  ColumnTransform tr;
  tr.mean = data.x.colwise().mean().transpose();
  tr.sd.resize(data.x.cols());
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const double var = (data.x.col(j).array() - tr.mean[j]).square().sum() / n;
    if (!(var > 0.0)) {
      throw UsageError("degenerate column");
    }
    tr.sd[j] = std::sqrt(var);
  }
  Dataset out = data;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    out.x.col(j) = (data.x.col(j).array() - tr.mean[j]) / tr.sd[j];
  }
  return {std::move(out), std::move(tr)};
}

Dataset unstandardize(const Dataset& data, const ColumnTransform& transform) {
  if (transform.mean.size() != data.x.cols() || transform.sd.size() != data.x.cols()) {
    throw std::invalid_argument("transform does not match the column count");
  }
  Dataset out = data;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    out.x.col(j) = data.x.col(j).array() * transform.sd[j] + transform.mean[j];
  }
  return out;
}

}  // namespace digmix
