#include "digmix/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "digmix/errors.hpp"

namespace digmix {

namespace {

// Floor for kinds that divide by p (hyperbolic, Weibull with shape < 1).
constexpr double kProbabilityFloor = 1e-12;

double checked_probability(double p) {
  if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) {
    throw std::domain_error("assigned probability outside [0, 1]");
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

void DiscomfortConfig::validate() const {
  switch (kind) {
    case DiscomfortKind::exponential:
      return;
    case DiscomfortKind::generalized_entropy:
    case DiscomfortKind::partial_entropy:
      if (!(q >= 0.0) || q == 1.0) {
        throw UsageError("entropy discomfort needs q >= 0 and q != 1");
      }
      return;
    case DiscomfortKind::pareto:
      if (!(p_m > 0.0 && p_m < 1.0) || !(shape > 0.0)) {
        throw UsageError("Pareto discomfort needs p_m in (0, 1) and shape > 0");
      }
      return;
    case DiscomfortKind::weibull:
      if (!(scale > 0.0) || !(shape > 0.0)) {
        throw UsageError("Weibull discomfort needs positive scale and shape");
      }
      return;
    case DiscomfortKind::hyperbolic:
      if (!(exponent > 0.0)) {
        throw UsageError("hyperbolic discomfort needs a positive exponent");
      }
      return;
    case DiscomfortKind::constant:
      if (!(value > 0.0)) {
        throw UsageError("constant discomfort must be positive");
      }
      return;
  }
}

double discomfort(double p_assigned, double lambda, const DiscomfortConfig& config) {
  const double p = checked_probability(p_assigned);
  switch (config.kind) {
    case DiscomfortKind::exponential:
      if (!(lambda >= 0.0)) {
        throw std::domain_error("lambda must be nonnegative");
      }
      return std::exp(-lambda * p);
    case DiscomfortKind::generalized_entropy:
      throw std::invalid_argument("generalized entropy discomfort needs the full row");
    case DiscomfortKind::partial_entropy:
      return (1.0 - std::pow(p, config.q)) / (config.q - 1.0);
    case DiscomfortKind::pareto:
      if (p < config.p_m) {
        return 0.0;
      }
      return config.shape * std::pow(config.p_m, config.shape) / std::pow(p, config.shape + 1.0);
    case DiscomfortKind::weibull: {
      const double u = std::max(p, kProbabilityFloor) / config.scale;
      return config.shape / config.scale * std::pow(u, config.shape - 1.0) *
             std::exp(-std::pow(u, config.shape));
    }
    case DiscomfortKind::hyperbolic:
      return std::pow(1.0 / std::max(p, kProbabilityFloor), config.exponent);
    case DiscomfortKind::constant:
      return config.value;
  }
  return 0.0;
}

double discomfort_row(std::span<const double> row, int assigned, double lambda,
                      const DiscomfortConfig& config) {
  if (assigned < 0 || static_cast<std::size_t>(assigned) >= row.size()) {
    throw std::out_of_range("assigned component out of range");
  }
  if (config.kind != DiscomfortKind::generalized_entropy) {
    return discomfort(row[static_cast<std::size_t>(assigned)], lambda, config);
  }
  double total = 0.0;
  for (double p : row) {
    total += std::pow(checked_probability(p), config.q);
  }
  return (1.0 - total) / (config.q - 1.0);
}

double ess(std::span<const double> p_assigned, double lambda) {
  if (p_assigned.empty()) {
    throw std::invalid_argument("ESS of an empty vector");
  }
  // ESS is scale free, so shift by the smallest p to keep the leading weight at 1.
  const double p_min = *std::min_element(p_assigned.begin(), p_assigned.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double p : p_assigned) {
    const double w = std::exp(-lambda * (p - p_min));
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / sum_sq;
}

LambdaSolution solve_lambda(std::span<const double> p_assigned, double m, double Lambda) {
  const double n = static_cast<double>(p_assigned.size());
  if (m > n) {
    throw UsageError("target exceeds population");
  }
  if (!(m >= 1.0)) {
    throw UsageError("ESS target must be at least 1");
  }
  if (!(Lambda >= 1.0)) {
    throw UsageError("lambda bound must be at least 1");
  }
  // Identical p make ESS flat in lambda; nothing to tune, so keep the lower endpoint.
  const auto [p_lo, p_hi] = std::minmax_element(p_assigned.begin(), p_assigned.end());
  if (*p_lo == *p_hi) {
    return {1.0, n, false};
  }
  auto gap = [&](double lambda) { return ess(p_assigned, lambda) - m; };

  const double h_low = gap(1.0);
  if (h_low <= 0.0) {
    return {1.0, h_low + m, false};
  }
  const double h_high = gap(Lambda);
  if (h_high >= 0.0) {
    return {Lambda, h_high + m, true};
  }

  // Geometric grid from 1 to Lambda; the first point with gap <= 0 closes the bracket.
  constexpr int kGrid = 17;
  double lo = 1.0;
  double hi = Lambda;
  double h_hi = h_high;
  for (int g = 1; g < kGrid - 1; ++g) {
    const double lambda = std::pow(Lambda, static_cast<double>(g) / (kGrid - 1));
    const double h = gap(lambda);
    if (h <= 0.0) {
      hi = lambda;
      h_hi = h;
      break;
    }
    lo = lambda;
  }
  if (h_hi == 0.0) {
    return {hi, m, false};
  }

  double best = hi;
  double best_gap = std::abs(h_hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    const double h = gap(mid);
    if (std::abs(h) < best_gap) {
      best = mid;
      best_gap = std::abs(h);
    }
    if (h == 0.0) {
      break;
    }
    if (h > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * hi) {
      break;
    }
  }
  return {best, ess(p_assigned, best), false};
}

AdaptiveState AdaptiveState::uniform(std::size_t n, std::size_t s, double Lambda) {
  AdaptiveState state;
  state.alpha = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  state.raw = state.alpha;
  state.s = s;
  state.Lambda = Lambda;
  state.ess = static_cast<double>(n);
  return state;
}

double lambda_schedule(AdaptiveState& adaptive, std::span<const double> p_assigned, double m) {
  if (adaptive.t > adaptive.s) {
    adaptive.lambda = 1.0;
    adaptive.ess = ess(p_assigned, 1.0);
    return adaptive.lambda;
  }
  const auto solution = solve_lambda(p_assigned, m, adaptive.Lambda);
  ++adaptive.refresh_count;
  if (solution.at_upper_bound) {
    ++adaptive.lambda_at_bound_count;
  }
  adaptive.lambda = solution.lambda;
  adaptive.ess = solution.ess;
  return adaptive.lambda;
}

std::optional<std::string> lambda_bound_warning(const AdaptiveState& adaptive) {
  if (adaptive.refresh_count == 0) {
    return std::nullopt;
  }
  const double share = static_cast<double>(adaptive.lambda_at_bound_count) /
                       static_cast<double>(adaptive.refresh_count);
  if (share <= 0.25) {
    return std::nullopt;
  }
  return "lambda reached its upper bound " + std::to_string(adaptive.Lambda) + " in " +
         std::to_string(adaptive.lambda_at_bound_count) + " of " +
         std::to_string(adaptive.refresh_count) +
         " adaptation-phase refreshes; consider raising --lambda-max";
}

std::pair<double, double> weight_pair(std::size_t t, const WeightSchedule& schedule) {
  if (t < 1) {
    throw std::invalid_argument("iterations start at 1");
  }
  double g = 0.0;
  if (t <= schedule.s) {
    const double offset = (static_cast<double>(t) - static_cast<double>(schedule.s)) / schedule.a;
    g = 0.5 * (1.0 - std::tanh(offset));
  } else {
    g = 1.0 / (static_cast<double>(t - schedule.s) + 2.0);
  }
  return {1.0 - g, g};
}

std::size_t transition_point(std::size_t n, std::size_t K, std::size_t m, double quantile_z) {
  if (n < 1 || m < 1 || m > n) {
    throw UsageError("transition point needs n >= 1 and 1 <= m <= n");
  }
  if (K <= 1) {
    return 1;
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(K);
  const double value =
      (nd * (kd - 1.0) + std::sqrt(nd * kd * (kd - 1.0)) * quantile_z) / static_cast<double>(m);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(value)));
}

void update_selection_weights_inplace(Vector& alpha, std::span<const double> discomfort, double f,
                                      double g) {
  if (static_cast<std::size_t>(alpha.size()) != discomfort.size()) {
    throw std::invalid_argument("selection weights and discomfort differ in length");
  }
  if (!(f >= 0.0) || !(g >= 0.0)) {
    throw std::invalid_argument("weight functions must be nonnegative");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    alpha[i] = f * alpha[i] + g * discomfort[static_cast<std::size_t>(i)];
    total += alpha[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("selection weights lost their normalizer");
  }
  alpha /= total;
}

void advance_selection_weights(AdaptiveState& adaptive, std::span<const double> discomfort,
                               double f, double g) {
  Vector& raw = adaptive.raw;
  if (static_cast<std::size_t>(raw.size()) != discomfort.size()) {
    throw std::invalid_argument("selection weights and discomfort differ in length");
  }
  if (!(f >= 0.0) || !(g >= 0.0)) {
    throw std::invalid_argument("weight functions must be nonnegative");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    raw[i] = f * raw[i] + g * discomfort[static_cast<std::size_t>(i)];
    total += raw[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("selection weights lost their normalizer");
  }
  adaptive.alpha = raw / total;
}

Vector update_selection_weights(std::span<const double> alpha_prev,
                                std::span<const double> discomfort, double f, double g) {
  Vector alpha =
      Eigen::Map<const Vector>(alpha_prev.data(), static_cast<Eigen::Index>(alpha_prev.size()));
  update_selection_weights_inplace(alpha, discomfort, f, g);
  return alpha;
}

std::size_t refresh_interval(std::size_t t, std::size_t T) {
  if (4 * t <= T) {
    return 3;
  }
  if (2 * t <= T) {
    return 6;
  }
  return 10;
}

bool refresh_due(std::size_t t, std::size_t T) {
  if (t < 1 || t > T) {
    throw std::out_of_range("iteration outside [1, T]");
  }
  return t == 1 || t % refresh_interval(t, T) == 0;
}

}  // namespace digmix
