#include "digmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "digmix/errors.hpp"

namespace digmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("dataset must have n >= 1 and d >= 1");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("dataset contains non-finite entries");
  }
  if (labels) {
    if (labels->size() != n()) {
      throw std::invalid_argument("label vector length differs from n");
    }
    if (std::any_of(labels->begin(), labels->end(), [](int l) { return l < 0; })) {
      throw std::invalid_argument("labels must be 0-based");
    }
  }
}

void PriorSpec::validate(std::size_t d) const {
  if (!(a > 0.0) || !(tau2 > 0.0) || !(alpha_sigma > 0.0) || !(beta_sigma > 0.0)) {
    throw std::invalid_argument("prior requires a, tau2, alpha_sigma, beta_sigma > 0");
  }
  if (static_cast<std::size_t>(m0.size()) != d) {
    throw std::invalid_argument("prior mean has wrong dimension");
  }
}

void MixtureState::validate(std::size_t n) const {
  const auto k = static_cast<Eigen::Index>(K());
  if (k < 1 || mu.rows() != k || sigma2.rows() != k || sigma2.cols() != mu.cols()) {
    throw std::invalid_argument("state shapes disagree");
  }
  if (z.size() != n) {
    throw std::invalid_argument("allocation vector length differs from n");
  }
  if (std::abs(pi.sum() - 1.0) > 1e-12 || (pi.array() <= 0.0).any()) {
    throw std::invalid_argument("weights are not a strictly positive simplex vector");
  }
  if (!sigma2.allFinite() || (sigma2.array() <= 0.0).any() || !mu.allFinite()) {
    throw std::invalid_argument("component parameters must be finite with positive variances");
  }
  if (std::any_of(z.begin(), z.end(), [k](int v) { return v < 0 || v >= k; })) {
    throw std::invalid_argument("allocation out of range");
  }
}

double log_component_density(std::span<const double> x, std::span<const double> mu,
                             std::span<const double> sigma2) {
  if (x.size() != mu.size() || x.size() != sigma2.size()) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (!all_finite(x) || !all_finite(mu) || !all_finite(sigma2)) {
    throw NumericalError("non-finite input");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(sigma2[j] > 0.0)) {
      throw std::invalid_argument("variance must be positive");
    }
    const double r = x[j] - mu[j];
    total += -0.5 * (kLog2Pi + std::log(sigma2[j])) - r * r / (2.0 * sigma2[j]);
  }
  return total;
}

void ComponentTable::update(const MixtureState& state) {
  const auto K = static_cast<Eigen::Index>(state.K());
  const auto d = state.mu.cols();
  log_offset_.resize(K);
  inv_var_.resize(K, d);
  mu_ = state.mu;
  for (Eigen::Index k = 0; k < K; ++k) {
    double offset = std::log(state.pi[k]) - 0.5 * kLog2Pi * static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      offset -= 0.5 * std::log(state.sigma2(k, j));
      inv_var_(k, j) = 1.0 / state.sigma2(k, j);
    }
    log_offset_[k] = offset;
  }
}

double ComponentTable::log_joint(std::size_t k, std::span<const double> x) const {
  const auto kk = static_cast<Eigen::Index>(k);
  const double* mu = mu_.data() + kk * mu_.cols();
  const double* iv = inv_var_.data() + kk * inv_var_.cols();
  double quad = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = x[j] - mu[j];
    quad += r * r * iv[j];
  }
  return log_offset_[kk] - 0.5 * quad;
}

void ComponentTable::responsibilities(std::span<const double> x, std::span<double> out) const {
  const std::size_t K = this->K();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = log_joint(k, x);
    top = std::max(top, out[k]);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = std::exp(out[k] - top);
    total += out[k];
  }
  const double inv = 1.0 / total;
  for (std::size_t k = 0; k < K; ++k) {
    out[k] *= inv;
  }
}

Vector responsibilities_row(std::span<const double> x, const MixtureState& state) {
  if (x.size() != state.d()) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (!all_finite(x)) {
    throw NumericalError("non-finite input");
  }
  const ComponentTable table(state);
  Vector row(static_cast<Eigen::Index>(state.K()));
  table.responsibilities(x, {row.data(), static_cast<std::size_t>(row.size())});
  return row;
}

ResponsibilityMatrix refresh_responsibilities(const Dataset& data, const MixtureState& state) {
  ResponsibilityMatrix out;
  refresh_responsibilities(data, ComponentTable(state), out);
  return out;
}

void refresh_responsibilities(const Dataset& data, const ComponentTable& table,
                              ResponsibilityMatrix& out) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto K = static_cast<Eigen::Index>(table.K());
  if (out.p.rows() != n || out.p.cols() != K) {
    out.p.resize(n, K);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    table.responsibilities(data.row(static_cast<std::size_t>(i)),
                           {out.p.data() + i * K, static_cast<std::size_t>(K)});
  }
  out.stale_age = 0;
}

double complete_log_likelihood(const Dataset& data, const std::vector<int>& z,
                               const ComponentTable& table) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    total += table.log_joint(static_cast<std::size_t>(z[i]), data.row(i));
  }
  if (!std::isfinite(total)) {
    throw NumericalError("complete log-likelihood is not finite");
  }
  return total;
}

double complete_log_likelihood(const Dataset& data, const MixtureState& state) {
  state.validate(data.n());
  return complete_log_likelihood(data, state.z, ComponentTable(state));
}

int sample_allocation(std::span<const double> x, const ComponentTable& table, Rng& rng,
                      std::span<double> row_out) {
  table.responsibilities(x, row_out);
  return static_cast<int>(rng.categorical(row_out));
}

AllocationDraw sample_allocation(std::size_t i, const Dataset& data, const MixtureState& state,
                                 Rng& rng) {
  if (i >= data.n()) {
    throw std::out_of_range("observation index out of range");
  }
  const ComponentTable table(state);
  AllocationDraw draw;
  draw.row.resize(static_cast<Eigen::Index>(state.K()));
  draw.component = sample_allocation(
      data.row(i), table, rng, {draw.row.data(), static_cast<std::size_t>(draw.row.size())});
  return draw;
}

std::vector<std::size_t> component_counts(std::span<const int> z, std::size_t K) {
  std::vector<std::size_t> counts(K, 0);
  for (int k : z) {
    ++counts[static_cast<std::size_t>(k)];
  }
  return counts;
}

Vector sample_mixture_weights(std::span<const std::size_t> counts, double a, Rng& rng) {
  const double base = a / static_cast<double>(counts.size());
  std::vector<double> conc(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    conc[k] = base + static_cast<double>(counts[k]);
  }
  const auto draw = draw_dirichlet(conc, rng);
  return Eigen::Map<const Vector>(draw.data(), static_cast<Eigen::Index>(draw.size()));
}

Vector sample_mixture_weights(const MixtureState& state, const PriorSpec& prior, Rng& rng) {
  return sample_mixture_weights(component_counts(state.z, state.K()), prior.a, rng);
}

ComponentStats::ComponentStats(std::size_t K, std::size_t d)
    : counts_(K, 0),
      sum_(Matrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d))),
      sum_sq_(Matrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(d))) {}

ComponentStats ComponentStats::from(const Dataset& data, std::span<const int> z, std::size_t K) {
  ComponentStats stats(K, data.d());
  for (std::size_t i = 0; i < data.n(); ++i) {
    stats.add(data.row(i), z[i]);
  }
  return stats;
}

void ComponentStats::add(std::span<const double> x, int k) {
  ++counts_[static_cast<std::size_t>(k)];
  double* s = sum_.data() + k * sum_.cols();
  double* s2 = sum_sq_.data() + k * sum_sq_.cols();
  for (std::size_t j = 0; j < x.size(); ++j) {
    s[j] += x[j];
    s2[j] += x[j] * x[j];
  }
}

void ComponentStats::remove(std::span<const double> x, int k) {
  auto& c = counts_[static_cast<std::size_t>(k)];
  if (c == 0) {
    throw std::logic_error("removing from an empty component");
  }
  --c;
  if (c == 0) {
    sum_.row(k).setZero();
    sum_sq_.row(k).setZero();
    return;
  }
  double* s = sum_.data() + k * sum_.cols();
  double* s2 = sum_sq_.data() + k * sum_sq_.cols();
  for (std::size_t j = 0; j < x.size(); ++j) {
    s[j] -= x[j];
    s2[j] -= x[j] * x[j];
  }
}

double ComponentStats::sum(std::size_t k, std::size_t j) const {
  return sum_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
}

double ComponentStats::residual_sum_sq(std::size_t k, std::size_t j, double center) const {
  const auto kk = static_cast<Eigen::Index>(k);
  const auto jj = static_cast<Eigen::Index>(j);
  const double n = static_cast<double>(counts_[k]);
  const double ss = sum_sq_(kk, jj) - 2.0 * center * sum_(kk, jj) + n * center * center;
  return std::max(ss, 0.0);
}

double sample_mean_given_variance(double count, double sum, double sigma2, double m0,
                                  double tau2, Rng& rng) {
  const double precision = 1.0 / tau2 + count / sigma2;
  const double mean = (m0 / tau2 + sum / sigma2) / precision;
  return rng.normal(mean, std::sqrt(1.0 / precision));
}

double sample_variance_given_mean(double alpha, double beta, double count, double sum_sq_resid,
                                  Rng& rng) {
  return draw_inverse_gamma(alpha + 0.5 * count, beta + 0.5 * sum_sq_resid, rng);
}

std::size_t sample_component_params(const ComponentStats& stats, const PriorSpec& prior,
                                    CovarianceModel cov, MixtureState& state, Rng& rng) {
  const std::size_t K = state.K();
  const std::size_t d = state.d();
  std::size_t clamps = 0;
  auto floored = [&clamps](double v) {
    if (!(v >= kVarianceFloor)) {
      ++clamps;
      return kVarianceFloor;
    }
    return v;
  };
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double nk = static_cast<double>(stats.count(k));
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      state.mu(kk, jj) = sample_mean_given_variance(nk, stats.sum(k, j), state.sigma2(kk, jj),
                                                    prior.m0[jj], prior.tau2, rng);
    }
    if (cov == CovarianceModel::diagonal) {
      for (std::size_t j = 0; j < d; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double ss = stats.residual_sum_sq(k, j, state.mu(kk, jj));
        state.sigma2(kk, jj) =
            floored(sample_variance_given_mean(prior.alpha_sigma, prior.beta_sigma, nk, ss, rng));
      }
    } else {
      double ss = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        ss += stats.residual_sum_sq(k, j, state.mu(kk, static_cast<Eigen::Index>(j)));
      }
      const double v = floored(sample_variance_given_mean(
          prior.alpha_sigma, prior.beta_sigma, nk * static_cast<double>(d), ss, rng));
      state.sigma2.row(kk).setConstant(v);
    }
  }
  return clamps;
}

ComponentDraw sample_component_params(const Dataset& data, const MixtureState& state,
                                      const PriorSpec& prior, Rng& rng, CovarianceModel cov) {
  state.validate(data.n());
  prior.validate(data.d());
  const auto stats = ComponentStats::from(data, state.z, state.K());
  MixtureState next = state;
  ComponentDraw out;
  out.clamp_events = sample_component_params(stats, prior, cov, next, rng);
  out.mu = std::move(next.mu);
  out.sigma2 = std::move(next.sigma2);
  return out;
}

PriorSpec empirical_bayes_hyperparams(const Dataset& data, std::size_t K) {
  if (data.n() < 2) {
    throw std::invalid_argument("empirical Bayes needs n >= 2");
  }
  if (K < 1) {
    throw std::invalid_argument("K must be at least 1");
  }
  const double n = static_cast<double>(data.n());
  const double d = static_cast<double>(data.d());
  PriorSpec prior;
  prior.m0 = data.x.colwise().mean().transpose();
  double mean_var = 0.0;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const double var = (data.x.col(j).array() - prior.m0[j]).square().sum() / n;
    if (!(var > 0.0)) {
      throw std::invalid_argument("degenerate column");
    }
    mean_var += var;
  }
  mean_var /= d;
  prior.a = 1.0;
  prior.tau2 = mean_var;
  prior.alpha_sigma = 2.5;
  prior.beta_sigma =
      (prior.alpha_sigma - 1.0) * mean_var / std::pow(static_cast<double>(K), 2.0 / d);
  return prior;
}

MixtureState initialize_state(const Dataset& data, std::size_t K, const PriorSpec& prior,
                              CovarianceModel cov, Rng& rng) {
  if (K < 1) {
    throw std::invalid_argument("K must be at least 1");
  }
  prior.validate(data.d());
  const auto kk = static_cast<Eigen::Index>(K);
  const auto d = static_cast<Eigen::Index>(data.d());
  MixtureState state;
  state.z.resize(data.n());
  for (auto& zi : state.z) {
    zi = static_cast<int>(rng.index(K));
  }
  state.pi = Vector::Constant(kk, 1.0 / static_cast<double>(K));
  state.mu.resize(kk, d);
  state.sigma2.resize(kk, d);
  const double sd = std::sqrt(prior.tau2);
  for (Eigen::Index k = 0; k < kk; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) {
      state.mu(k, j) = rng.normal(prior.m0[j], sd);
    }
    if (cov == CovarianceModel::diagonal) {
      for (Eigen::Index j = 0; j < d; ++j) {
        state.sigma2(k, j) =
            std::max(draw_inverse_gamma(prior.alpha_sigma, prior.beta_sigma, rng), kVarianceFloor);
      }
    } else {
      state.sigma2.row(k).setConstant(
          std::max(draw_inverse_gamma(prior.alpha_sigma, prior.beta_sigma, rng), kVarianceFloor));
    }
  }
  return state;
}

std::uint64_t state_hash(const MixtureState& state) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t b = 0; b < bytes; ++b) {
      h ^= p[b];
      h *= 0x100000001b3ULL;
    }
  };
  mix(state.z.data(), state.z.size() * sizeof(int));
  mix(state.pi.data(), static_cast<std::size_t>(state.pi.size()) * sizeof(double));
  mix(state.mu.data(), static_cast<std::size_t>(state.mu.size()) * sizeof(double));
  mix(state.sigma2.data(), static_cast<std::size_t>(state.sigma2.size()) * sizeof(double));
  return h;
}

}  // namespace digmix
