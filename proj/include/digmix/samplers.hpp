#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "digmix/adaptation.hpp"
#include "digmix/model.hpp"
#include "digmix/random.hpp"

namespace digmix {

/// Systematic scan, random scan (uniform, with replacement) and discomfort-informed
/// adaptive scan (weighted, without replacement).
enum class Method { ssg, rsg, dig };

std::string to_string(Method method);
Method parse_method(std::string_view name);

struct SamplerConfig {
  Method method = Method::dig;
  std::size_t iterations = 5000;
  std::size_t m = 10;
  double lambda_max = 100.0;
  double tanh_a = 1.0;
  std::uint64_t seed = 0;
  /// Allocation snapshot cadence; 0 disables snapshots.
  std::size_t snapshot_every = 10;
  /// Snapshots are taken for t > snapshot_start. Defaults to s for DIG and 0 otherwise.
  std::optional<std::size_t> snapshot_start;
  DiscomfortConfig discomfort;
  CovarianceModel covariance = CovarianceModel::diagonal;
  /// DIG iterations at which the normalized selection weights are copied into the trace.
  std::vector<std::size_t> alpha_checkpoints;
  /// When set, exp(-p_{i,z_i}) at the current state is averaged over t > burn-in.
  std::optional<std::size_t> discomfort_burn_in;

  void validate(std::size_t n) const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::int64_t wall_clock_ns = 0;  // cumulative sampler time, excludes recording
  double cll = 0.0;
  double lambda = 1.0;
  double ess = 0.0;
  double g_weight = 0.0;
  std::size_t occupied = 0;
};

/// Monte Carlo estimate of E[exp(-p_{i,z_i})] per observation with batch-means errors.
struct DiscomfortAverage {
  Vector mean;
  Vector standard_error;
  std::size_t samples = 0;
  std::size_t batches = 0;
};

struct ChainTrace {
  Method method = Method::ssg;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t K = 0;
  std::size_t m = 0;
  std::vector<IterationRecord> records;
  std::vector<std::pair<std::size_t, std::vector<int>>> snapshots;
  std::uint64_t initial_state_hash = 0;
  MixtureState final_state;
  std::vector<std::string> warnings;
  std::size_t transition_point = 0;
  std::size_t allocation_draws = 0;
  std::size_t clamp_events = 0;
  std::vector<std::pair<std::size_t, Vector>> alpha_snapshots;
  std::optional<DiscomfortAverage> discomfort_average;
  std::optional<AdaptiveState> adaptive;
};

/// What an observer sees after every iteration. `selected` lists the observations whose
/// allocations were redrawn, in update order; `alpha` is set for the adaptive sampler.
struct IterationView {
  std::size_t t = 0;
  const MixtureState& state;
  std::span<const std::size_t> selected;
  const Vector* alpha = nullptr;
};

using IterationObserver = std::function<void(const IterationView&)>;

ChainTrace run_ssg(const Dataset& data, std::size_t K, const PriorSpec& prior,
                   const SamplerConfig& config, Rng& rng, const IterationObserver& observer = {});
ChainTrace run_rsg(const Dataset& data, std::size_t K, const PriorSpec& prior,
                   const SamplerConfig& config, Rng& rng, const IterationObserver& observer = {});
ChainTrace run_dig(const Dataset& data, std::size_t K, const PriorSpec& prior,
                   const SamplerConfig& config, Rng& rng, const IterationObserver& observer = {});

/// Dispatches on config.method with a generator seeded from config.seed.
ChainTrace run_chain(const Dataset& data, std::size_t K, const PriorSpec& prior,
                     const SamplerConfig& config, const IterationObserver& observer = {});

/// m distinct indices by successive weighted draws, realised as an exponential race:
/// index i gets key -log(U_i) / w_i and the m smallest keys win, returned in key order.
std::vector<std::size_t> sample_without_replacement(std::span<const double> weights,
                                                    std::size_t m, Rng& rng);

/// m indices drawn uniformly with replacement, in draw order.
std::vector<std::size_t> sample_with_replacement(std::size_t n, std::size_t m, Rng& rng);

}  // namespace digmix
