#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "digmix/random.hpp"

namespace digmix {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// Contiguous view of row i of a row-major matrix.
inline std::span<const double> row_span(const Matrix& m, std::size_t i) {
  return {m.data() + i * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

/// Variance draws are floored here; each floor hit is counted by the caller.
inline constexpr double kVarianceFloor = 1e-12;

/// n x d observations (row i is observation i) with optional 0-based ground truth labels.
struct Dataset {
  Matrix x;
  std::optional<Labels> labels;

  std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(x.cols()); }
  std::span<const double> row(std::size_t i) const { return row_span(x, i); }

  /// Throws std::invalid_argument if empty, non-finite, or the labels are malformed.
  void validate() const;
};

/// Diagonal keeps one variance per component and dimension. Spherical shares a single
/// variance across the dimensions of a component (stored replicated across columns).
enum class CovarianceModel { diagonal, spherical };

/// Independent priors: pi ~ Dirichlet(a/K, ...), mu_kj ~ N(m0_j, tau2),
/// sigma2_kj ~ InverseGamma(alpha_sigma, beta_sigma).
struct PriorSpec {
  double a = 1.0;
  Vector m0;
  double tau2 = 1.0;
  double alpha_sigma = 2.5;
  double beta_sigma = 1.0;

  void validate(std::size_t d) const;
};

struct MixtureState {
  std::vector<int> z;
  Vector pi;
  Matrix mu;
  Matrix sigma2;

  std::size_t K() const { return static_cast<std::size_t>(pi.size()); }
  std::size_t d() const { return static_cast<std::size_t>(mu.cols()); }

  /// Checks the simplex, positivity and range invariants for a dataset of n rows.
  void validate(std::size_t n) const;
};

/// Posterior allocation probabilities p[i][k] under the parameters at the last refresh.
struct ResponsibilityMatrix {
  Matrix p;
  std::size_t stale_age = 0;

  double assigned(std::size_t i, int k) const { return p(static_cast<Eigen::Index>(i), k); }
};

/// Sum over dimensions of the univariate normal log density.
double log_component_density(std::span<const double> x, std::span<const double> mu,
                             std::span<const double> sigma2);

/// Per-component constants (log pi_k plus the Gaussian normalizer, inverse variances)
/// cached so that allocation work is a dot product per component.
class ComponentTable {
 public:
  ComponentTable() = default;
  explicit ComponentTable(const MixtureState& state) { update(state); }

  void update(const MixtureState& state);

  std::size_t K() const { return static_cast<std::size_t>(log_offset_.size()); }

  /// log pi_k + log N(x | mu_k, diag(sigma2_k)).
  double log_joint(std::size_t k, std::span<const double> x) const;

  /// Writes the normalized responsibilities of x into out (size K).
  void responsibilities(std::span<const double> x, std::span<double> out) const;

 private:
  Vector log_offset_;
  Matrix inv_var_;
  Matrix mu_;
};

/// Responsibilities of one observation, computed with log-sum-exp.
Vector responsibilities_row(std::span<const double> x, const MixtureState& state);

ResponsibilityMatrix refresh_responsibilities(const Dataset& data, const MixtureState& state);

/// In-place refresh that reuses the cached table and the matrix storage.
void refresh_responsibilities(const Dataset& data, const ComponentTable& table,
                              ResponsibilityMatrix& out);

/// sum_i [log pi_{z_i} + log N(x_i | mu_{z_i}, sigma2_{z_i})].
double complete_log_likelihood(const Dataset& data, const MixtureState& state);
double complete_log_likelihood(const Dataset& data, const std::vector<int>& z,
                               const ComponentTable& table);

struct AllocationDraw {
  int component = 0;
  Vector row;
};

/// Draws z_i from its full conditional and hands back the responsibility row it used.
AllocationDraw sample_allocation(std::size_t i, const Dataset& data, const MixtureState& state,
                                 Rng& rng);
int sample_allocation(std::span<const double> x, const ComponentTable& table, Rng& rng,
                      std::span<double> row_out);

std::vector<std::size_t> component_counts(std::span<const int> z, std::size_t K);

/// pi ~ Dirichlet(a/K + n_1, ..., a/K + n_K).
Vector sample_mixture_weights(std::span<const std::size_t> counts, double a, Rng& rng);
Vector sample_mixture_weights(const MixtureState& state, const PriorSpec& prior, Rng& rng);

/// Running per-component sufficient statistics (count, sum, sum of squares).
class ComponentStats {
 public:
  ComponentStats() = default;
  ComponentStats(std::size_t K, std::size_t d);

  static ComponentStats from(const Dataset& data, std::span<const int> z, std::size_t K);

  void add(std::span<const double> x, int k);
  void remove(std::span<const double> x, int k);

  std::size_t K() const { return counts_.size(); }
  std::size_t d() const { return static_cast<std::size_t>(sum_.cols()); }
  std::size_t count(std::size_t k) const { return counts_[k]; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  double sum(std::size_t k, std::size_t j) const;
  /// sum_{i in k} (x_ij - center)^2, clipped at zero.
  double residual_sum_sq(std::size_t k, std::size_t j, double center) const;

 private:
  std::vector<std::size_t> counts_;
  Matrix sum_;
  Matrix sum_sq_;
};

/// mu | sigma2 ~ N(mean, 1/precision), precision = 1/tau2 + count/sigma2,
/// mean = (m0/tau2 + sum/sigma2) / precision.
double sample_mean_given_variance(double count, double sum, double sigma2, double m0,
                                  double tau2, Rng& rng);

/// sigma2 | mu ~ InverseGamma(alpha + count/2, beta + sum_sq_resid/2). Not floored.
double sample_variance_given_mean(double alpha, double beta, double count, double sum_sq_resid,
                                  Rng& rng);

struct ComponentDraw {
  Matrix mu;
  Matrix sigma2;
  std::size_t clamp_events = 0;
};

/// One semi-conjugate sweep over every component: means given variances, then variances
/// given the new means. Empty components are drawn from the prior.
ComponentDraw sample_component_params(const Dataset& data, const MixtureState& state,
                                      const PriorSpec& prior, Rng& rng,
                                      CovarianceModel cov = CovarianceModel::diagonal);

/// Same sweep driven by running statistics; updates state.mu and state.sigma2 in place
/// and returns the number of variance floor hits.
std::size_t sample_component_params(const ComponentStats& stats, const PriorSpec& prior,
                                    CovarianceModel cov, MixtureState& state, Rng& rng);

/// Data-driven prior: a = 1 (each weight gets 1/K), m0 = column means, tau2 = mean column variance,
/// alpha_sigma = 2.5, beta_sigma = 1.5 * mean column variance / K^(2/d).
/// Variances use the population (divide by n) convention.
PriorSpec empirical_bayes_hyperparams(const Dataset& data, std::size_t K);

/// z uniform over components, pi uniform, (mu, sigma2) from the prior.
MixtureState initialize_state(const Dataset& data, std::size_t K, const PriorSpec& prior,
                              CovarianceModel cov, Rng& rng);

/// FNV-1a over the allocations and the raw bytes of every parameter.
std::uint64_t state_hash(const MixtureState& state);

}  // namespace digmix
