#include "digmix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "digmix/errors.hpp"

namespace digmix {

DataKind parse_data_kind(const std::string& name) {
  if (name == "miller") return DataKind::miller;
  if (name == "motivating5") return DataKind::motivating5;
  if (name == "misspec4") return DataKind::misspec4;
  if (name == "csv") return DataKind::csv;
  throw UsageError("unknown data source '" + name + "'");
}

std::string to_string(DataKind kind) {
  switch (kind) {
    case DataKind::miller:
      return "miller";
    case DataKind::motivating5:
      return "motivating5";
    case DataKind::misspec4:
      return "misspec4";
    case DataKind::csv:
      return "csv";
  }
  return "unknown";
}

std::size_t default_m(std::size_t n) {
  if (n < 1) {
    throw UsageError("n must be positive");
  }
  const double nd = static_cast<double>(n);
  double m = 0.0;
  if (n <= 1000) {
    m = std::round(0.01 * nd);
  } else if (n <= 5000) {
    m = std::round(0.02 * nd);
  } else {
    m = std::round(0.03 * nd);
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

void ExperimentSpec::validate() const {
  if (replicas < 1) throw UsageError("--replicas must be at least 1");
  if (methods.empty()) throw UsageError("--methods must name at least one sampler");
  if (k_fit && *k_fit < 1) throw UsageError("--k-fit must be at least 1");
  if (iterations < 1) throw UsageError("--iters must be at least 1");
  if (window < 2) throw UsageError("--window must be at least 2");
  if (!(lambda_max >= 1.0)) throw UsageError("--lambda-max must be at least 1");
  if (!(tanh_a > 0.0)) throw UsageError("--tanh-a must be positive");
  if (data == DataKind::csv && csv_path.empty()) {
    throw UsageError("--data csv needs --csv-path");
  }
  if (data != DataKind::csv && label_column) {
    throw UsageError("--label-col only applies to --data csv");
  }
  if (m && *m < 1) throw UsageError("--m must be at least 1");
  if (tau2 && !(*tau2 > 0.0)) throw UsageError("--tau2 must be positive");
  if (alpha_every < 1) throw UsageError("alpha spacing must be at least 1");
}

bool ExperimentSpec::standardize_enabled() const {
  return standardize.value_or(data == DataKind::miller || data == DataKind::csv);
}

PriorSpec ExperimentSpec::prior_for(const Dataset& dataset, std::size_t K) const {
  PriorSpec prior = empirical_bayes_hyperparams(dataset, K);
  const bool motivating = data == DataKind::motivating5;
  if (zero_prior_mean.value_or(motivating)) {
    prior.m0.setZero();
  }
  if (tau2) {
    prior.tau2 = *tau2;
  } else if (motivating) {
    prior.tau2 = 1.0;
  }
  prior.validate(dataset.d());
  return prior;
}

Dataset prepare_data(const ExperimentSpec& spec, bool* standardized) {
  Dataset data;
  if (spec.data == DataKind::csv) {
    data = load_csv(spec.csv_path, csv_has_header(spec.csv_path), spec.label_column);
  } else {
    SyntheticSpec syn;
    syn.family = spec.data == DataKind::miller        ? Family::miller_harrison
                 : spec.data == DataKind::motivating5 ? Family::motivating5
                                                      : Family::misspec4;
    syn.n = spec.n;
    syn.d = spec.data == DataKind::miller ? spec.d : 2;
    syn.seed = spec.data_seed.value_or(spec.seed);
    data = generate(syn);
  }
  const bool on = spec.standardize_enabled();
  if (on) {
    data = standardize(data).first;
  }
  if (standardized) *standardized = on;
  return data;
}

namespace {

std::size_t fitted_K(const ExperimentSpec& spec, const Dataset& data) {
  if (spec.k_fit) return *spec.k_fit;
  switch (spec.data) {
    case DataKind::miller:
      return 3;
    case DataKind::motivating5:
      return 5;
    case DataKind::misspec4:
      return 4;
    case DataKind::csv:
      if (data.labels) {
        return static_cast<std::size_t>(*std::max_element(data.labels->begin(),
                                                          data.labels->end())) + 1;
      }
      throw UsageError("--k-fit is required for unlabeled CSV data");
  }
  return 0;
}

void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  if (threads <= 1) {
    for (auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < jobs.size(); j = next++) {
        try {
          jobs[j]();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.data = prepare_data(spec, &result.standardized);
  const Dataset& data = result.data;
  const std::size_t n = data.n();
  const std::size_t K = fitted_K(spec, data);
  result.K = K;
  const PriorSpec prior = spec.prior_for(data, K);
  const std::size_t subset = spec.m.value_or(default_m(n));
  if (subset > n) {
    throw UsageError("--m exceeds the number of observations");
  }

  SamplerConfig base;
  base.iterations = spec.iterations;
  base.m = subset;
  base.lambda_max = spec.lambda_max;
  base.tanh_a = spec.tanh_a;
  base.snapshot_every = spec.snapshot_every;

  for (Method method : spec.methods) {
    MethodResult mr;
    mr.method = method;
    mr.m = method == Method::ssg ? n : subset;
    mr.traces.resize(spec.replicas);
    result.methods.push_back(std::move(mr));
  }

  // The SSG reference needs two chains; the long-run discomfort average for the alpha gap
  // needs one SSG chain with a burn-in. Both come from the listed SSG replicas when present.
  const auto ssg_it = std::find(spec.methods.begin(), spec.methods.end(), Method::ssg);
  const bool has_dig =
      std::find(spec.methods.begin(), spec.methods.end(), Method::dig) != spec.methods.end();
  const std::size_t reference_chains = std::max<std::size_t>(2, spec.replicas);
  const std::size_t listed_ssg = ssg_it == spec.methods.end() ? 0 : spec.replicas;
  std::vector<ChainTrace> hidden(reference_chains - listed_ssg);
  const std::size_t burn_in = spec.iterations / 2;
  const bool want_gap = has_dig && burn_in >= 1 && spec.iterations - burn_in >= 2;

  std::vector<std::function<void()>> jobs;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    for (std::size_t r = 0; r < spec.replicas; ++r) {
      jobs.emplace_back([&, mi, r] {
        SamplerConfig config = base;
        config.method = spec.methods[mi];
        config.seed = spec.seed + r;
        if (config.method == Method::dig && r == 0) {
          for (std::size_t t = spec.alpha_every; t <= spec.iterations; t += spec.alpha_every) {
            config.alpha_checkpoints.push_back(t);
          }
        }
        if (config.method == Method::ssg && r == 0 && want_gap) {
          config.discomfort_burn_in = burn_in;
        }
        result.methods[mi].traces[r] = run_chain(data, K, prior, config);
      });
    }
  }
  for (std::size_t h = 0; h < hidden.size(); ++h) {
    jobs.emplace_back([&, h] {
      SamplerConfig config = base;
      config.method = Method::ssg;
      config.seed = spec.seed + listed_ssg + h;
      config.snapshot_every = 0;
      if (listed_ssg == 0 && h == 0 && want_gap) {
        config.discomfort_burn_in = burn_in;
      }
      hidden[h] = run_chain(data, K, prior, config);
    });
  }
  run_jobs(jobs, spec.threads);

  std::vector<const ChainTrace*> ssg_chains;
  if (listed_ssg > 0) {
    const auto idx = static_cast<std::size_t>(ssg_it - spec.methods.begin());
    for (const auto& t : result.methods[idx].traces) ssg_chains.push_back(&t);
  }
  for (const auto& t : hidden) ssg_chains.push_back(&t);
  const std::size_t tail = std::min(spec.window, spec.iterations);
  std::vector<double> tails;
  for (const auto* t : ssg_chains) tails.push_back(tail_mean(*t, tail));
  result.reference = ssg_reference(tails);
  result.reference_source = hidden.empty() ? "ssg replicas" : "ssg replicas plus extra seeds";

  for (auto& mr : result.methods) {
    for (const auto& trace : mr.traces) {
      ChainSummary cs;
      cs.seed = trace.seed;
      cs.converged_cll = tail_mean(trace, tail);
      if (spec.iterations >= spec.window) {
        cs.convergence = time_to_converge(trace, result.reference, spec.window);
        if (cs.convergence.t2c_iteration) {
          cs.t2c_epochs =
              epochs(static_cast<double>(*cs.convergence.t2c_iteration), n, trace.m);
        }
      } else {
        cs.convergence.reference_mean = result.reference.first;
        cs.convergence.reference_var = result.reference.second;
        cs.convergence.window = spec.window;
      }
      if (data.labels) {
        cs.ari = adjusted_rand_index(trace.final_state.z, *data.labels);
        if (!trace.snapshots.empty()) {
          std::vector<std::vector<int>> zs;
          for (const auto& [t, z] : trace.snapshots) zs.push_back(z);
          const std::size_t take = std::max<std::size_t>(1, spec.window / std::max<std::size_t>(1, spec.snapshot_every));
          cs.ari_mode = adjusted_rand_index(mode_allocation(zs, K, take), *data.labels);
        }
      }
      cs.occupied = occupied_components(trace.final_state.z, K).first;
      cs.total_seconds = static_cast<double>(trace.records.back().wall_clock_ns) * 1e-9;
      for (const auto& w : trace.warnings) {
        result.warnings.push_back(to_string(trace.method) + " seed " +
                                  std::to_string(trace.seed) + ": " + w);
      }
      mr.chains.push_back(std::move(cs));
    }
  }

  if (want_gap) {
    const ChainTrace* dig0 = nullptr;
    for (const auto& mr : result.methods) {
      if (mr.method == Method::dig) dig0 = &mr.traces.front();
    }
    const ChainTrace* oracle = listed_ssg > 0 ? ssg_chains.front() : &hidden.front();
    result.alpha_gap = alpha_limit_check(*dig0, *oracle);
  }

  if (!spec.out_dir.empty()) {
    write_artifacts(spec, result);
  }
  return result;
}

std::map<std::string, double> summarize(const MethodResult& method, const ExperimentResult& all) {
  std::vector<double> cll, t2c_s, t2c_e, t2c_censored, start_s, ari, ari_mode, occupied, total;
  std::size_t converged = 0;
  for (std::size_t r = 0; r < method.chains.size(); ++r) {
    const auto& c = method.chains[r];
    cll.push_back(c.converged_cll);
    occupied.push_back(static_cast<double>(c.occupied));
    total.push_back(c.total_seconds);
    if (c.convergence.t2c_seconds) {
      ++converged;
      t2c_s.push_back(*c.convergence.t2c_seconds);
      t2c_e.push_back(*c.t2c_epochs);
      start_s.push_back(*c.convergence.window_start_seconds);
      t2c_censored.push_back(*c.convergence.t2c_seconds);
    } else {
      t2c_censored.push_back(c.total_seconds);
    }
    if (c.ari) ari.push_back(*c.ari);
    if (c.ari_mode) ari_mode.push_back(*c.ari_mode);
  }
  // Most frequent occupied count, ties to the smaller count.
  std::map<double, int> tally;
  for (double o : occupied) ++tally[o];
  double mode = 0.0;
  int best = -1;
  for (const auto& [value, count] : tally) {
    if (count > best) {
      best = count;
      mode = value;
    }
  }
  const double R = static_cast<double>(method.chains.size());
  std::map<std::string, double> out{
      {"replicas", R},
      {"n", static_cast<double>(all.data.n())},
      {"d", static_cast<double>(all.data.d())},
      {"k_fit", static_cast<double>(all.K)},
      {"m", static_cast<double>(method.m)},
      {"iterations", static_cast<double>(method.traces.front().records.size())},
      {"reference_mean", all.reference.first},
      {"reference_var", all.reference.second},
      {"cll_mean", mean_of(cll)},
      {"cll_sd", sd_of(cll)},
      {"cll_se", sd_of(cll) / std::sqrt(R)},
      {"converged_count", static_cast<double>(converged)},
      {"t2c_seconds_mean", mean_of(t2c_s)},
      {"t2c_seconds_sd", sd_of(t2c_s)},
      {"t2c_epochs_mean", mean_of(t2c_e)},
      {"t2c_epochs_sd", sd_of(t2c_e)},
      {"t2c_seconds_censored_mean", mean_of(t2c_censored)},
      {"t2c_window_start_seconds_mean", mean_of(start_s)},
      {"total_seconds_mean", mean_of(total)},
      {"occupied_mean", mean_of(occupied)},
      {"occupied_mode", mode},
  };
  if (!ari.empty()) {
    out["ari_mean"] = mean_of(ari);
    out["ari_sd"] = sd_of(ari);
  }
  if (!ari_mode.empty()) {
    out["ari_mode_mean"] = mean_of(ari_mode);
  }
  return out;
}

namespace {

std::unique_ptr<std::FILE, int (*)(std::FILE*)> open_out(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) {
    throw IoError("cannot write " + path);
  }
  return {f, &std::fclose};
}

void close_checked(std::unique_ptr<std::FILE, int (*)(std::FILE*)>& f, const std::string& path) {
  if (std::ferror(f.get()) || std::fclose(f.release()) != 0) {
    throw IoError("write failed: " + path);
  }
}

std::string pad2(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02zu", r);
  return buf;
}

}  // namespace

void write_trace_csv(const ChainTrace& trace, const std::string& path) {
  auto f = open_out(path);
  std::fputs("iter,wall_ns,cll,lambda,ess,g_weight,occupied\n", f.get());
  for (const auto& r : trace.records) {
    std::fprintf(f.get(), "%zu,%lld,%.17g,%.17g,%.17g,%.17g,%zu\n", r.iteration,
                 static_cast<long long>(r.wall_clock_ns), r.cll, r.lambda, r.ess, r.g_weight,
                 r.occupied);
  }
  close_checked(f, path);
}

void write_artifacts(const ExperimentSpec& spec, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.out_dir, ec);
  if (ec) {
    throw IoError("cannot create " + spec.out_dir + ": " + ec.message());
  }
  const fs::path dir(spec.out_dir);

  std::map<Method, double> t2c;
  for (const auto& mr : result.methods) {
    t2c[mr.method] = summarize(mr, result)["t2c_seconds_censored_mean"];
  }

  for (const auto& mr : result.methods) {
    const std::string name = to_string(mr.method);
    for (std::size_t r = 0; r < mr.traces.size(); ++r) {
      write_trace_csv(mr.traces[r], (dir / ("trace_" + name + "_r" + pad2(r) + ".csv")).string());
    }

    nlohmann::ordered_json j;
    j["method"] = name;
    j["data"] = to_string(spec.data);
    j["standardized"] = result.standardized;
    j["seed"] = spec.seed;
    j["data_seed"] = spec.data_seed.value_or(spec.seed);
    j["window"] = spec.window;
    j["reference_source"] = result.reference_source;
    for (const auto& [key, value] : summarize(mr, result)) {
      if (std::isfinite(value)) {
        j[key] = value;
      } else {
        j[key] = nullptr;
      }
    }
    if (t2c.count(Method::dig) && t2c[Method::dig] > 0.0) {
      j["t2c_censored_ratio_to_dig"] = t2c[mr.method] / t2c[Method::dig];
    }
    j["warnings"] = static_cast<double>(std::count_if(
        result.warnings.begin(), result.warnings.end(),
        [&](const std::string& w) { return w.rfind(name + " ", 0) == 0; }));
    j["t2c_assumption"] = mr.chains.front().convergence.assumption;
    const std::string json_path = (dir / ("summary_" + name + ".json")).string();
    std::ofstream out(json_path);
    out << j.dump(2) << '\n';
    if (!out) {
      throw IoError("write failed: " + json_path);
    }

    const auto& snaps = mr.traces.front().snapshots;
    if (!snaps.empty()) {
      std::vector<std::vector<int>> zs;
      for (const auto& [t, z] : snaps) zs.push_back(z);
      const Matrix psm = posterior_similarity_matrix(zs);
      const std::string psm_path = (dir / ("psm_" + name + ".csv")).string();
      auto f = open_out(psm_path);
      for (Eigen::Index i = 0; i < psm.rows(); ++i) {
        for (Eigen::Index k = 0; k < psm.cols(); ++k) {
          std::fprintf(f.get(), k == 0 ? "%.6g" : ",%.6g", psm(i, k));
        }
        std::fputc('\n', f.get());
      }
      close_checked(f, psm_path);
    }
  }

  if (!result.alpha_gap.empty()) {
    const std::string path = (dir / "alpha_gap.csv").string();
    auto f = open_out(path);
    std::fputs("iter,gap\n", f.get());
    for (const auto& g : result.alpha_gap) {
      std::fprintf(f.get(), "%zu,%.17g\n", g.iteration, g.gap);
    }
    close_checked(f, path);
  }
}

}  // namespace digmix
