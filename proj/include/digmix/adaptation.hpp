#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "digmix/model.hpp"

namespace digmix {

/// Discomfort kinds. Exponential exp(-lambda * p) is the one the adaptive sampler uses by
/// default; the rest are selectable alternatives. `constant` ignores p entirely and turns
/// the adaptive sampler into uniform selection (used as an ablation).
enum class DiscomfortKind {
  exponential,
  generalized_entropy,
  partial_entropy,
  pareto,
  weibull,
  hyperbolic,
  constant,
};

struct DiscomfortConfig {
  DiscomfortKind kind = DiscomfortKind::exponential;
  double q = 2.0;         // entropy index, q >= 0 and q != 1
  double p_m = 0.1;       // Pareto scale, in (0, 1)
  double shape = 1.0;     // Pareto / Weibull shape
  double scale = 1.0;     // Weibull scale
  double exponent = 1.0;  // hyperbolic exponent
  double value = 1.0;     // constant kind

  void validate() const;
};

/// Discomfort of an observation whose current component has responsibility p_assigned.
/// The generalized entropy kind needs the whole row; use discomfort_row for it.
double discomfort(double p_assigned, double lambda, const DiscomfortConfig& config);

/// Row-aware variant covering every kind. `assigned` is the current allocation.
double discomfort_row(std::span<const double> row, int assigned, double lambda,
                      const DiscomfortConfig& config);

/// (sum_i exp(-lambda p_i))^2 / sum_i exp(-2 lambda p_i), a value in [1, n].
double ess(std::span<const double> p_assigned, double lambda);

struct LambdaSolution {
  double lambda = 1.0;
  double ess = 0.0;
  bool at_upper_bound = false;
};

/// Finds lambda in [1, Lambda] with ESS(lambda) ~= m. Endpoint 1 is returned when all p are
/// equal or ESS(1) <= m, and Lambda when ESS(Lambda) >= m; otherwise a 17-point grid locates a sign
/// change that is then bisected until the bracket collapses (at most 200 halvings).
LambdaSolution solve_lambda(std::span<const double> p_assigned, double m, double Lambda);

struct AdaptiveState {
  /// Normalized selection probabilities used for drawing the subset.
  Vector alpha;
  /// Unnormalized convex combination of alpha_0 and the discomfort vectors; the recursion
  /// runs on this vector and alpha is its normalization.
  Vector raw;
  double lambda = 1.0;
  double Lambda = 100.0;
  double ess = 0.0;
  std::size_t s = 1;
  std::size_t t = 0;
  std::size_t lambda_at_bound_count = 0;
  std::size_t refresh_count = 0;

  /// alpha and raw uniform (1/n) over n observations, lambda = 1.
  static AdaptiveState uniform(std::size_t n, std::size_t s, double Lambda);
};

/// Lambda at a responsibility refresh: the ESS root while t <= s, exactly 1 afterwards.
/// Bound hits and refreshes inside the adaptation phase are counted on the state.
double lambda_schedule(AdaptiveState& adaptive, std::span<const double> p_assigned, double m);

/// Warning text when lambda sat on its upper bound for more than a quarter of the
/// refreshes of the adaptation phase.
std::optional<std::string> lambda_bound_warning(const AdaptiveState& adaptive);

struct WeightSchedule {
  double a = 1.0;
  std::size_t s = 1;
};

/// (f, g) with f + g == 1: tanh pair up to s, polynomial decay 1/(t - s + 2) after.
std::pair<double, double> weight_pair(std::size_t t, const WeightSchedule& schedule);

inline constexpr double kNormalQuantile99 = 2.326348;

/// ceil((n (K - 1) + sqrt(n K (K - 1)) z) / m); 1 when K == 1.
std::size_t transition_point(std::size_t n, std::size_t K, std::size_t m,
                             double quantile_z = kNormalQuantile99);

/// Normalized f * alpha_prev + g * discomfort.
Vector update_selection_weights(std::span<const double> alpha_prev,
                                std::span<const double> discomfort, double f, double g);
/// In-place form: alpha <- normalized f * alpha + g * discomfort.
void update_selection_weights_inplace(Vector& alpha, std::span<const double> discomfort, double f,
                                      double g);

/// Sampler step: raw <- f * raw + g * discomfort, alpha <- raw / sum(raw).
void advance_selection_weights(AdaptiveState& adaptive, std::span<const double> discomfort,
                               double f, double g);

/// Refresh interval 3 / 6 / 10 over the first quarter / second quarter / second half of
/// the run; t == 1 always refreshes.
std::size_t refresh_interval(std::size_t t, std::size_t T);
bool refresh_due(std::size_t t, std::size_t T);

}  // namespace digmix
