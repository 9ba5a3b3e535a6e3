#include "digmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace digmix {

double tail_mean(const ChainTrace& trace, std::size_t tail) {
  const auto& r = trace.records;
  if (tail < 1 || r.size() < tail) {
    throw std::invalid_argument("trace shorter than the tail");
  }
  double sum = 0.0;
  for (std::size_t i = r.size() - tail; i < r.size(); ++i) {
    sum += r[i].cll;
  }
  return sum / static_cast<double>(tail);
}

std::pair<double, double> ssg_reference(std::span<const double> tail_means) {
  if (tail_means.size() < 2) {
    throw std::invalid_argument("need >=2 chains for variance");
  }
  const double R = static_cast<double>(tail_means.size());
  double mean = 0.0;
  for (double v : tail_means) mean += v;
  mean /= R;
  double ss = 0.0;
  for (double v : tail_means) ss += (v - mean) * (v - mean);
  return {mean, ss / (R - 1.0)};
}

std::pair<double, double> ssg_reference(std::span<const ChainTrace> traces, std::size_t tail) {
  std::vector<double> means;
  means.reserve(traces.size());
  for (const auto& trace : traces) {
    means.push_back(tail_mean(trace, tail));
  }
  return ssg_reference(means);
}

ConvergenceReport time_to_converge(std::span<const double> cll,
                                   std::span<const std::int64_t> wall_ns,
                                   std::pair<double, double> reference, std::size_t window,
                                   double threshold) {
  if (window < 2) {
    throw std::invalid_argument("window must hold at least two iterations");
  }
  if (cll.size() < window) {
    throw std::invalid_argument("trace shorter than the window");
  }
  if (wall_ns.size() != cll.size()) {
    throw std::invalid_argument("clock and CLL series differ in length");
  }
  ConvergenceReport report;
  report.reference_mean = reference.first;
  report.reference_var = reference.second;
  report.window = window;
  report.threshold = threshold;
  report.assumption =
      "z = (window mean - reference mean) / sqrt(window sample variance / window + "
      "between-chain variance of reference tail means); stride 1";

  // Running sums of the values centered on the reference keep the variance stable.
  const double ref = reference.first;
  const double w = static_cast<double>(window);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < cll.size(); ++t) {
    const double v = cll[t] - ref;
    sum += v;
    sum_sq += v * v;
    if (t >= window) {
      const double old = cll[t - window] - ref;
      sum -= old;
      sum_sq -= old * old;
    }
    if (t + 1 < window) {
      continue;
    }
    const double mean_gap = sum / w;
    const double s2 = std::max(0.0, (sum_sq - w * mean_gap * mean_gap) / (w - 1.0));
    const double denom = std::sqrt(s2 / w + reference.second);
    double z = 0.0;
    if (denom > 0.0) {
      z = mean_gap / denom;
    } else if (mean_gap != 0.0) {
      z = std::numeric_limits<double>::infinity();
    }
    if (std::abs(z) < threshold) {
      const std::size_t start = t + 1 - window;
      report.t2c_iteration = t + 1;
      report.t2c_seconds = static_cast<double>(wall_ns[t]) * 1e-9;
      report.window_start = start + 1;
      report.window_start_seconds = static_cast<double>(wall_ns[start]) * 1e-9;
      break;
    }
  }
  return report;
}

ConvergenceReport time_to_converge(const ChainTrace& trace, std::pair<double, double> reference,
                                   std::size_t window, double threshold) {
  std::vector<double> cll;
  std::vector<std::int64_t> wall;
  cll.reserve(trace.records.size());
  wall.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    cll.push_back(r.cll);
    wall.push_back(r.wall_clock_ns);
  }
  return time_to_converge(cll, wall, reference, window, threshold);
}

double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw std::invalid_argument("label vectors differ in length");
  }
  if (labels_a.size() < 2) {
    throw std::invalid_argument("ARI needs at least two observations");
  }
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    cells[{labels_a[i], labels_b[i]}] += 1.0;
    rows[labels_a[i]] += 1.0;
    cols[labels_b[i]] += 1.0;
  }
  const auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [key, c] : cells) index += pairs(c);
  double sum_a = 0.0;
  for (const auto& [key, c] : rows) sum_a += pairs(c);
  double sum_b = 0.0;
  for (const auto& [key, c] : cols) sum_b += pairs(c);
  const double expected = sum_a * sum_b / pairs(static_cast<double>(labels_a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    return (index == sum_a && index == sum_b) ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

Matrix posterior_similarity_matrix(std::span<const std::vector<int>> snapshots) {
  if (snapshots.empty()) {
    throw std::invalid_argument("no snapshots");
  }
  const std::size_t n = snapshots.front().size();
  Matrix psm = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& z : snapshots) {
    if (z.size() != n) {
      throw std::invalid_argument("snapshots differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        if (z[i] == z[j]) {
          psm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0;
        }
      }
    }
  }
  psm /= static_cast<double>(snapshots.size());
  psm.triangularView<Eigen::StrictlyLower>() = psm.transpose();
  return psm;
}

std::pair<std::size_t, Vector> occupied_components(std::span<const int> z, std::size_t K) {
  const auto counts = component_counts(z, K);
  Vector proportions(static_cast<Eigen::Index>(K));
  std::size_t occupied = 0;
  for (std::size_t k = 0; k < K; ++k) {
    occupied += counts[k] > 0 ? 1 : 0;
    proportions[static_cast<Eigen::Index>(k)] =
        static_cast<double>(counts[k]) / static_cast<double>(z.size());
  }
  return {occupied, proportions};
}

double epochs(double iteration, std::size_t n, std::size_t m) {
  if (m < 1 || n < 1) {
    throw std::invalid_argument("epochs need n, m >= 1");
  }
  return iteration * static_cast<double>(m) / static_cast<double>(n);
}

std::vector<int> mode_allocation(std::span<const std::vector<int>> snapshots, std::size_t K,
                                 std::size_t window) {
  if (snapshots.empty()) {
    throw std::invalid_argument("no snapshots");
  }
  const std::size_t take = std::min(window, snapshots.size());
  const auto recent = snapshots.subspan(snapshots.size() - take);
  const std::size_t n = recent.front().size();
  std::vector<int> mode(n, 0);
  std::vector<std::size_t> tally(K);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(tally.begin(), tally.end(), 0);
    for (const auto& z : recent) {
      ++tally[static_cast<std::size_t>(z[i])];
    }
    mode[i] = static_cast<int>(std::max_element(tally.begin(), tally.end()) - tally.begin());
  }
  return mode;
}

std::vector<AlphaGap> alpha_limit_check(std::span<const std::pair<std::size_t, Vector>> alpha,
                                        const Vector& expected_discomfort) {
  const double total = expected_discomfort.sum();
  if (!(total > 0.0)) {
    throw std::invalid_argument("discomfort average is not positive");
  }
  const Vector target = expected_discomfort / total;
  std::vector<AlphaGap> out;
  out.reserve(alpha.size());
  for (const auto& [t, a] : alpha) {
    if (a.size() != target.size()) {
      throw std::invalid_argument("selection weights and discomfort average differ in length");
    }
    out.push_back({t, (a - target).cwiseAbs().maxCoeff()});
  }
  return out;
}

std::vector<AlphaGap> alpha_limit_check(const ChainTrace& dig, const ChainTrace& ssg) {
  if (!ssg.discomfort_average || ssg.discomfort_average->samples < 2) {
    throw std::invalid_argument("insufficient post-burn-in samples");
  }
  return alpha_limit_check(dig.alpha_snapshots, ssg.discomfort_average->mean);
}

}  // namespace digmix
