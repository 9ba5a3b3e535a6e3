#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "digmix/datagen.hpp"
#include "digmix/diagnostics.hpp"
#include "digmix/samplers.hpp"

namespace digmix {

enum class DataKind { miller, motivating5, misspec4, csv };

DataKind parse_data_kind(const std::string& name);
std::string to_string(DataKind kind);

struct ExperimentSpec {
  DataKind data = DataKind::miller;
  std::string csv_path;
  std::optional<LabelColumn> label_column;
  std::size_t n = 1000;
  std::size_t d = 2;
  /// Fitted component count; defaults to the generating count for synthetic data.
  std::optional<std::size_t> k_fit;
  std::vector<Method> methods{Method::ssg, Method::rsg, Method::dig};
  std::size_t replicas = 20;
  std::size_t iterations = 5000;
  std::optional<std::size_t> m;
  double lambda_max = 100.0;
  double tanh_a = 1.0;
  std::uint64_t seed = 0;
  /// Seed of the synthetic dataset; the base seed when unset.
  std::optional<std::uint64_t> data_seed;
  std::size_t window = 1000;
  std::size_t snapshot_every = 10;
  /// Empty means nothing is written.
  std::string out_dir;
  /// 0 means all available cores.
  std::size_t threads = 0;
  /// On by default for miller and csv; the other families are fitted on their raw scale.
  std::optional<bool> standardize;
  /// Prior mean of the component means: column means, or zero when set. The motivating
  /// family defaults to a zero mean with unit variance on its raw scale.
  std::optional<bool> zero_prior_mean;
  std::optional<double> tau2;
  /// Spacing of the stored DIG selection weights for the alpha gap series.
  std::size_t alpha_every = 100;

  void validate() const;
  bool standardize_enabled() const;
  /// Empirical Bayes prior with the mean overrides applied.
  PriorSpec prior_for(const Dataset& data, std::size_t K) const;
};

/// 1% of n up to 1000, 2% up to 5000, 3% beyond (rounded, at least 1).
std::size_t default_m(std::size_t n);

struct ChainSummary {
  std::uint64_t seed = 0;
  double converged_cll = 0.0;
  ConvergenceReport convergence;
  std::optional<double> t2c_epochs;
  std::optional<double> ari;
  std::optional<double> ari_mode;
  std::size_t occupied = 0;
  double total_seconds = 0.0;
};

struct MethodResult {
  Method method = Method::ssg;
  std::size_t m = 0;
  std::vector<ChainTrace> traces;
  std::vector<ChainSummary> chains;
};

struct ExperimentResult {
  Dataset data;
  bool standardized = false;
  std::size_t K = 0;
  std::pair<double, double> reference{0.0, 0.0};
  std::string reference_source;
  std::vector<MethodResult> methods;
  std::vector<AlphaGap> alpha_gap;
  std::vector<std::string> warnings;
};

/// Loads or generates the dataset, applying the standardization default.
Dataset prepare_data(const ExperimentSpec& spec, bool* standardized = nullptr);

/// Runs every method x replica with seed = base + replica index, computes the SSG reference,
/// convergence reports and clustering scores, and writes the artifacts when out_dir is set.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Flat key/value summary of one method.
std::map<std::string, double> summarize(const MethodResult& method, const ExperimentResult& all);

void write_trace_csv(const ChainTrace& trace, const std::string& path);
void write_artifacts(const ExperimentSpec& spec, const ExperimentResult& result);

}  // namespace digmix
