#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "digmix/model.hpp"
#include "digmix/random.hpp"

namespace digmix {

enum class Family { miller_harrison, motivating5, misspec4 };

std::string to_string(Family family);

struct SyntheticSpec {
  Family family = Family::miller_harrison;
  std::size_t n = 1000;
  std::size_t d = 2;
  std::uint64_t seed = 0;

  void validate() const;
  /// Generating component count: 3, 5 or 4.
  std::size_t true_K() const;
};

/// Three equally weighted unit-covariance clusters whose means repeat -3/sqrt(d), 0 and
/// 3/sqrt(d) in every coordinate.
Dataset gen_miller_harrison(std::size_t n, std::size_t d, Rng& rng);

/// Five equally weighted unit-covariance clusters centred on (c, c), c = -10, -5, 0, 5, 10.
Dataset gen_motivating5(std::size_t n, Rng& rng);

/// Four full-covariance clusters with weights (0.44, 0.3, 0.25, 0.01); the second is an
/// elongated ellipse rotated by 45 degrees.
Dataset gen_misspec4(std::size_t n, Rng& rng);

/// Covariance of the rotated misspec4 component.
Eigen::Matrix2d misspec4_rotated_covariance();

Dataset generate(const SyntheticSpec& spec);

/// Label column chosen by header name or by 0-based index.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Comma separated numeric table. Label values must form a contiguous integer range
/// starting at 0 or 1 and are returned 0-based. Throws CsvError.
Dataset load_csv(const std::string& path, bool has_header,
                 const std::optional<LabelColumn>& label_column = std::nullopt);

/// True when some cell of the first row does not parse as a number.
bool csv_has_header(const std::string& path);

struct ColumnTransform {
  Vector mean;
  Vector sd;
};

/// Centres every column and scales it to unit population variance.
std::pair<Dataset, ColumnTransform> standardize(const Dataset& data);
Dataset unstandardize(const Dataset& data, const ColumnTransform& transform);

}  // namespace digmix
