#include "digmix/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "digmix/errors.hpp"

namespace digmix {

std::string to_string(Method method) {
  switch (method) {
    case Method::ssg:
      return "ssg";
    case Method::rsg:
      return "rsg";
    case Method::dig:
      return "dig";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "ssg") return Method::ssg;
  if (name == "rsg") return Method::rsg;
  if (name == "dig") return Method::dig;
  throw UsageError("unknown method '" + std::string(name) + "' (expected ssg, rsg or dig)");
}

void SamplerConfig::validate(std::size_t n) const {
  if (iterations < 1) {
    throw UsageError("need at least one iteration");
  }
  if (method != Method::ssg && (m < 1 || m > n)) {
    throw UsageError("subset size m must satisfy 1 <= m <= n");
  }
  if (!(lambda_max >= 1.0)) {
    throw UsageError("lambda bound must be at least 1");
  }
  if (!(tanh_a > 0.0)) {
    throw UsageError("tanh sharpness must be positive");
  }
  if (discomfort_burn_in && *discomfort_burn_in >= iterations) {
    throw UsageError("discomfort burn-in leaves no samples");
  }
  discomfort.validate();
}

std::vector<std::size_t> sample_without_replacement(std::span<const double> weights,
                                                    std::size_t m, Rng& rng) {
  const std::size_t n = weights.size();
  if (m > n) {
    throw std::invalid_argument("cannot draw more distinct indices than there are weights");
  }
  std::vector<double> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("selection weights must be positive and finite");
    }
    keys[i] = -std::log(rng.uniform()) / w;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_key = [&](std::size_t a, std::size_t b) {
    return keys[a] < keys[b] || (keys[a] == keys[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                    by_key);
  order.resize(m);
  return order;
}

std::vector<std::size_t> sample_with_replacement(std::size_t n, std::size_t m, Rng& rng) {
  if (n < 1) {
    throw std::invalid_argument("empty population");
  }
  std::vector<std::size_t> out(m);
  for (auto& i : out) {
    i = rng.index(n);
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

// Shared iteration skeleton: allocation moves keep the running statistics in sync, the
// parameter step reads them, and recording happens outside the timed region.
class Chain {
 public:
  Chain(const Dataset& data, std::size_t K, const PriorSpec& prior, const SamplerConfig& config,
        Rng& rng, const IterationObserver& observer)
      : data_(data), prior_(prior), config_(config), rng_(rng), observer_(observer) {
    data.validate();
    prior.validate(data.d());
    if (K < 1) {
      throw UsageError("need at least one component");
    }
    config.validate(data.n());
    state_ = initialize_state(data, K, prior, config.covariance, rng);
    stats_ = ComponentStats::from(data, state_.z, K);
    table_.update(state_);
    row_.resize(K);

    trace_.method = config.method;
    trace_.seed = config.seed;
    trace_.n = data.n();
    trace_.K = K;
    trace_.m = config.method == Method::ssg ? data.n() : config.m;
    trace_.initial_state_hash = state_hash(state_);
    trace_.records.reserve(config.iterations);

    if (config.discomfort_burn_in) {
      const std::size_t samples = config.iterations - *config.discomfort_burn_in;
      batches_ = std::min<std::size_t>(20, samples);
      batch_sums_ = Matrix::Zero(static_cast<Eigen::Index>(batches_),
                                 static_cast<Eigen::Index>(data.n()));
      batch_sizes_.assign(batches_, 0);
    }
  }

  MixtureState& state() { return state_; }
  const ComponentTable& table() const { return table_; }
  ChainTrace& trace() { return trace_; }
  Rng& rng() { return rng_; }

  void start_clock() { started_ = Clock::now(); }
  void stop_clock() { elapsed_ += Clock::now() - started_; }

  // Redraws z_i under the parameters of the previous iteration. The row used for the draw
  // is left in row_ for callers that keep a responsibility matrix.
  void allocate(std::size_t i) {
    const auto x = data_.row(i);
    const int next = sample_allocation(x, table_, rng_, row_);
    const int prev = state_.z[i];
    if (next != prev) {
      stats_.remove(x, prev);
      stats_.add(x, next);
      state_.z[i] = next;
    }
    ++trace_.allocation_draws;
  }

  std::span<const double> last_row() const { return row_; }

  void update_parameters() {
    state_.pi = sample_mixture_weights(stats_.counts(), prior_.a, rng_);
    trace_.clamp_events += sample_component_params(stats_, prior_, config_.covariance, state_, rng_);
    table_.update(state_);
  }

  void record(std::size_t t, double lambda, double ess, double g,
              std::span<const std::size_t> selected, const Vector* alpha) {
    IterationRecord rec;
    rec.iteration = t;
    rec.wall_clock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed_).count();
    rec.cll = complete_log_likelihood(data_, state_.z, table_);
    rec.lambda = lambda;
    rec.ess = ess;
    rec.g_weight = g;
    rec.occupied = static_cast<std::size_t>(std::count_if(
        stats_.counts().begin(), stats_.counts().end(), [](std::size_t c) { return c > 0; }));
    trace_.records.push_back(rec);

    const std::size_t start = config_.snapshot_start.value_or(
        config_.method == Method::dig ? trace_.transition_point : 0);
    if (config_.snapshot_every > 0 && t > start && t % config_.snapshot_every == 0) {
      trace_.snapshots.emplace_back(t, state_.z);
    }
    if (config_.discomfort_burn_in && t > *config_.discomfort_burn_in) {
      accumulate_discomfort(t);
    }
    if (observer_) {
      observer_(IterationView{t, state_, selected, alpha});
    }
  }

  ChainTrace finish() {
    if (batches_ > 0) {
      const auto n = static_cast<Eigen::Index>(data_.n());
      DiscomfortAverage avg;
      avg.batches = batches_;
      avg.samples = std::accumulate(batch_sizes_.begin(), batch_sizes_.end(), std::size_t{0});
      avg.mean = batch_sums_.colwise().sum().transpose() / static_cast<double>(avg.samples);
      avg.standard_error = Vector::Zero(n);
      if (batches_ >= 2) {
        Matrix means = batch_sums_;
        for (std::size_t b = 0; b < batches_; ++b) {
          means.row(static_cast<Eigen::Index>(b)) /= static_cast<double>(batch_sizes_[b]);
        }
        const double B = static_cast<double>(batches_);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double mu = means.col(i).mean();
          const double var = (means.col(i).array() - mu).square().sum() / (B - 1.0);
          avg.standard_error[i] = std::sqrt(var / B);
        }
      }
      trace_.discomfort_average = std::move(avg);
    }
    if (trace_.clamp_events > 0) {
      trace_.warnings.push_back("variance floor hit " + std::to_string(trace_.clamp_events) +
                                " times");
    }
    trace_.final_state = state_;
    return std::move(trace_);
  }

 private:
  void accumulate_discomfort(std::size_t t) {
    const std::size_t burn = *config_.discomfort_burn_in;
    const std::size_t samples = config_.iterations - burn;
    const std::size_t b = (t - burn - 1) * batches_ / samples;
    auto target = batch_sums_.row(static_cast<Eigen::Index>(b));
    for (std::size_t i = 0; i < data_.n(); ++i) {
      table_.responsibilities(data_.row(i), row_);
      const double p = std::clamp(row_[static_cast<std::size_t>(state_.z[i])], 0.0, 1.0);
      target[static_cast<Eigen::Index>(i)] += std::exp(-p);
    }
    ++batch_sizes_[b];
  }

  const Dataset& data_;
  const PriorSpec& prior_;
  const SamplerConfig& config_;
  Rng& rng_;
  const IterationObserver& observer_;

  MixtureState state_;
  ComponentStats stats_;
  ComponentTable table_;
  std::vector<double> row_;
  ChainTrace trace_;

  Clock::time_point started_{};
  Clock::duration elapsed_{};

  std::size_t batches_ = 0;
  Matrix batch_sums_;
  std::vector<std::size_t> batch_sizes_;
};

SamplerConfig with_method(const SamplerConfig& config, Method method) {
  SamplerConfig out = config;
  out.method = method;
  return out;
}

}  // namespace

ChainTrace run_ssg(const Dataset& data, std::size_t K, const PriorSpec& prior,
                   const SamplerConfig& config_in, Rng& rng, const IterationObserver& observer) {
  const SamplerConfig config = with_method(config_in, Method::ssg);
  Chain chain(data, K, prior, config, rng, observer);
  const std::size_t n = data.n();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    chain.start_clock();
    for (std::size_t i = 0; i < n; ++i) {
      chain.allocate(i);
    }
    chain.update_parameters();
    chain.stop_clock();
    chain.record(t, 1.0, static_cast<double>(n), 0.0, all, nullptr);
  }
  return chain.finish();
}

ChainTrace run_rsg(const Dataset& data, std::size_t K, const PriorSpec& prior,
                   const SamplerConfig& config_in, Rng& rng, const IterationObserver& observer) {
  const SamplerConfig config = with_method(config_in, Method::rsg);
  Chain chain(data, K, prior, config, rng, observer);
  const std::size_t n = data.n();
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    chain.start_clock();
    const auto selected = sample_with_replacement(n, config.m, chain.rng());
    for (std::size_t i : selected) {
      chain.allocate(i);
    }
    chain.update_parameters();
    chain.stop_clock();
    chain.record(t, 1.0, static_cast<double>(n), 0.0, selected, nullptr);
  }
  return chain.finish();
}

ChainTrace run_dig(const Dataset& data, std::size_t K, const PriorSpec& prior,
                   const SamplerConfig& config_in, Rng& rng, const IterationObserver& observer) {
  const SamplerConfig config = with_method(config_in, Method::dig);
  Chain chain(data, K, prior, config, rng, observer);
  const std::size_t n = data.n();
  const std::size_t T = config.iterations;
  const std::size_t s = transition_point(n, K, config.m);
  chain.trace().transition_point = s;

  AdaptiveState adaptive = AdaptiveState::uniform(n, s, config.lambda_max);
  const WeightSchedule schedule{config.tanh_a, s};
  const bool exponential = config.discomfort.kind == DiscomfortKind::exponential;

  ResponsibilityMatrix resp;
  resp.p.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  std::vector<double> p_assigned(n);
  std::vector<double> D(n);
  std::vector<std::size_t> checkpoints = config.alpha_checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_checkpoint = checkpoints.begin();

  const auto discomfort_of = [&](std::size_t i) {
    const int zi = chain.state().z[i];
    if (exponential) {
      return std::exp(-adaptive.lambda * resp.assigned(i, zi));
    }
    const double value = discomfort_row(row_span(resp.p, i), zi, adaptive.lambda, config.discomfort);
    return std::max(value, 1e-12);
  };

  std::vector<std::size_t> selected;
  double previous_lambda = -1.0;
  for (std::size_t t = 1; t <= T; ++t) {
    chain.start_clock();
    adaptive.t = t;
    bool refreshed = false;
    if (refresh_due(t, T)) {
      refresh_responsibilities(data, chain.table(), resp);
      for (std::size_t i = 0; i < n; ++i) {
        p_assigned[i] = resp.assigned(i, chain.state().z[i]);
      }
      lambda_schedule(adaptive, p_assigned, static_cast<double>(config.m));
      refreshed = true;
    } else {
      ++resp.stale_age;
      if (t > s) {
        adaptive.lambda = 1.0;
      }
    }

    const auto [f, g] = weight_pair(t, schedule);
    // Only rows touched by the last allocation step change D unless the matrix or lambda did.
    if (refreshed || adaptive.lambda != previous_lambda) {
      for (std::size_t i = 0; i < n; ++i) {
        D[i] = discomfort_of(i);
      }
    } else {
      for (std::size_t i : selected) {
        D[i] = discomfort_of(i);
      }
    }
    previous_lambda = adaptive.lambda;
    advance_selection_weights(adaptive, D, f, g);

    selected = sample_without_replacement(
        std::span<const double>(adaptive.alpha.data(), n), config.m, chain.rng());
    for (std::size_t i : selected) {
      chain.allocate(i);
      const auto row = chain.last_row();
      std::copy(row.begin(), row.end(), resp.p.row(static_cast<Eigen::Index>(i)).data());
    }
    chain.update_parameters();
    chain.stop_clock();

    while (next_checkpoint != checkpoints.end() && *next_checkpoint == t) {
      chain.trace().alpha_snapshots.emplace_back(t, adaptive.alpha);
      ++next_checkpoint;
    }
    chain.record(t, adaptive.lambda, adaptive.ess, g, selected, &adaptive.alpha);
  }

  if (auto warning = lambda_bound_warning(adaptive)) {
    chain.trace().warnings.push_back(*warning);
  }
  chain.trace().adaptive = adaptive;
  return chain.finish();
}

ChainTrace run_chain(const Dataset& data, std::size_t K, const PriorSpec& prior,
                     const SamplerConfig& config, const IterationObserver& observer) {
  Rng rng(config.seed);
  switch (config.method) {
    case Method::ssg:
      return run_ssg(data, K, prior, config, rng, observer);
    case Method::rsg:
      return run_rsg(data, K, prior, config, rng, observer);
    case Method::dig:
      return run_dig(data, K, prior, config, rng, observer);
  }
  throw UsageError("unknown method");
}

}  // namespace digmix
