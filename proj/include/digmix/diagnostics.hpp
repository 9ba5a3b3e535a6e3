#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "digmix/model.hpp"
#include "digmix/samplers.hpp"

namespace digmix {

struct ConvergenceReport {
  double reference_mean = 0.0;
  double reference_var = 0.0;
  /// Iteration at the end of the first window with |z| < threshold.
  std::optional<std::size_t> t2c_iteration;
  std::optional<double> t2c_seconds;
  /// First iteration of that window, with its wall clock.
  std::optional<std::size_t> window_start;
  std::optional<double> window_start_seconds;
  std::size_t window = 1000;
  double threshold = 1.96;
  std::string assumption;
};

/// Mean of the last `tail` CLL values.
double tail_mean(const ChainTrace& trace, std::size_t tail = 1000);

/// (mean of per-chain tail means, sample variance of the per-chain tail means).
std::pair<double, double> ssg_reference(std::span<const ChainTrace> traces, std::size_t tail = 1000);
std::pair<double, double> ssg_reference(std::span<const double> tail_means);

/// Sliding window (stride 1) z = (window mean - ref mean) / sqrt(s_w^2 / window + ref var).
ConvergenceReport time_to_converge(const ChainTrace& trace, std::pair<double, double> reference,
                                   std::size_t window = 1000, double threshold = 1.96);
ConvergenceReport time_to_converge(std::span<const double> cll,
                                   std::span<const std::int64_t> wall_ns,
                                   std::pair<double, double> reference, std::size_t window = 1000,
                                   double threshold = 1.96);

/// Chance-corrected agreement from the contingency table. When the expected index equals
/// its maximum the ratio is 0/0: 1 is returned if the partitions agree, 0 otherwise.
double adjusted_rand_index(std::span<const int> labels_a, std::span<const int> labels_b);

/// Co-clustering frequencies over the snapshots.
Matrix posterior_similarity_matrix(std::span<const std::vector<int>> snapshots);

/// (number of components with at least one member, n_k / n).
std::pair<std::size_t, Vector> occupied_components(std::span<const int> z, std::size_t K);

/// iteration * m / n.
double epochs(double iteration, std::size_t n, std::size_t m);

/// Per-observation most frequent label over the last `window` snapshots (ties to the
/// smaller label).
std::vector<int> mode_allocation(std::span<const std::vector<int>> snapshots, std::size_t K,
                                 std::size_t window);

struct AlphaGap {
  std::size_t iteration = 0;
  double gap = 0.0;
};

/// Max-norm distance between each stored selection-weight vector and the normalized
/// long-run discomfort average.
std::vector<AlphaGap> alpha_limit_check(std::span<const std::pair<std::size_t, Vector>> alpha,
                                        const Vector& expected_discomfort);
/// Same, taking the weights from a DIG trace and the average from an SSG trace run with
/// a discomfort burn-in.
std::vector<AlphaGap> alpha_limit_check(const ChainTrace& dig, const ChainTrace& ssg);

}  // namespace digmix
