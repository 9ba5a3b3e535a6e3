#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "digmix/datagen.hpp"
#include "digmix/samplers.hpp"

using namespace digmix;

namespace {

Dataset small_miller(std::size_t n = 120, std::uint64_t seed = 1) {
  Rng rng(seed);
  return standardize(gen_miller_harrison(n, 2, rng)).first;
}

SamplerConfig config_for(Method method, std::size_t T, std::size_t m, std::uint64_t seed) {
  SamplerConfig c;
  c.method = method;
  c.iterations = T;
  c.m = m;
  c.seed = seed;
  return c;
}

bool same_trace(const ChainTrace& a, const ChainTrace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    // wall clock is the one field allowed to differ
    if (x.iteration != y.iteration || x.cll != y.cll || x.lambda != y.lambda || x.ess != y.ess ||
        x.g_weight != y.g_weight || x.occupied != y.occupied) {
      return false;
    }
  }
  return a.snapshots == b.snapshots && a.final_state.z == b.final_state.z &&
         a.final_state.mu == b.final_state.mu && a.final_state.sigma2 == b.final_state.sigma2 &&
         a.final_state.pi == b.final_state.pi && a.initial_state_hash == b.initial_state_hash;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("dig") == Method::dig);
  CHECK(to_string(Method::rsg) == "rsg");
  CHECK_THROWS(parse_method("mh"));
}

TEST_CASE("single observation, single component") {
  Dataset ds;
  ds.x = Matrix::Constant(1, 1, 0.4);
  PriorSpec prior;
  prior.m0 = Vector::Zero(1);
  for (Method m : {Method::ssg, Method::rsg, Method::dig}) {
    auto trace = run_chain(ds, 1, prior, config_for(m, 50, 1, 3), [](const IterationView& v) {
      CHECK(v.state.z[0] == 0);
    });
    CHECK(trace.records.size() == 50);
  }
}

TEST_CASE("traces are deterministic and well formed") {
  auto ds = small_miller();
  auto prior = empirical_bayes_hyperparams(ds, 3);
  for (Method m : {Method::ssg, Method::rsg, Method::dig}) {
    CAPTURE(to_string(m));
    auto c = config_for(m, 300, 6, 42);
    auto a = run_chain(ds, 3, prior, c);
    auto b = run_chain(ds, 3, prior, c);
    CHECK(same_trace(a, b));
    CHECK(a.records.size() == 300);
    for (std::size_t i = 1; i < a.records.size(); ++i) {
      CHECK(a.records[i].wall_clock_ns >= a.records[i - 1].wall_clock_ns);
      CHECK(a.records[i].iteration == i + 1);
    }
    auto other = run_chain(ds, 3, prior, config_for(m, 300, 6, 43));
    CHECK_FALSE(same_trace(a, other));
  }
}

TEST_CASE("initial state is shared across methods") {
  auto ds = small_miller();
  auto prior = empirical_bayes_hyperparams(ds, 3);
  const auto h = run_chain(ds, 3, prior, config_for(Method::ssg, 5, 6, 9)).initial_state_hash;
  CHECK(run_chain(ds, 3, prior, config_for(Method::rsg, 5, 6, 9)).initial_state_hash == h);
  CHECK(run_chain(ds, 3, prior, config_for(Method::dig, 5, 6, 9)).initial_state_hash == h);
}

TEST_CASE("state invariants hold every iteration and draw counts match") {
  auto ds = small_miller();
  auto prior = empirical_bayes_hyperparams(ds, 4);
  for (Method m : {Method::ssg, Method::rsg, Method::dig}) {
    CAPTURE(to_string(m));
    std::size_t visited = 0;
    auto trace = run_chain(ds, 4, prior, config_for(m, 200, 7, 5), [&](const IterationView& v) {
      CHECK_NOTHROW(v.state.validate(ds.n()));
      visited += v.selected.size();
      if (m == Method::ssg) {
        for (std::size_t i = 0; i < v.selected.size(); ++i) CHECK(v.selected[i] == i);
      }
      if (m == Method::dig) {
        std::set<std::size_t> distinct(v.selected.begin(), v.selected.end());
        CHECK(distinct.size() == v.selected.size());
      }
    });
    const std::size_t per_iter = m == Method::ssg ? ds.n() : 7;
    CHECK(trace.allocation_draws == 200 * per_iter);
    CHECK(visited == 200 * per_iter);
  }
}

TEST_CASE("random scan with m = n repeats indices") {
  auto ds = small_miller(40);
  auto prior = empirical_bayes_hyperparams(ds, 3);
  int short_scans = 0;
  run_chain(ds, 3, prior, config_for(Method::rsg, 100, 40, 1), [&](const IterationView& v) {
    std::set<std::size_t> distinct(v.selected.begin(), v.selected.end());
    if (distinct.size() < ds.n()) ++short_scans;
  });
  CHECK(short_scans == 100);
  Rng rng(2);
  auto draw = sample_with_replacement(10, 1000, rng);
  CHECK(*std::max_element(draw.begin(), draw.end()) == 9);
}

TEST_CASE("weighted sampling without replacement") {
  Rng rng(77);
  SUBCASE("m = n is a permutation") {
    const std::vector<double> w{0.1, 0.4, 0.2, 0.3};
    auto idx = sample_without_replacement(w, 4, rng);
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SUBCASE("m > n") {
    const std::vector<double> w{0.5, 0.5};
    CHECK_THROWS(sample_without_replacement(w, 3, rng));
  }
  SUBCASE("first pick follows the weights") {
    const std::vector<double> w{0.5, 0.3, 0.2};
    const int N = 100000;
    std::vector<int> hits(3, 0);
    for (int i = 0; i < N; ++i) ++hits[sample_without_replacement(w, 1, rng)[0]];
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(hits[k] / double(N) - w[k]) < 3 * std::sqrt(w[k] * (1 - w[k]) / N));
    }
  }
  SUBCASE("pairs match successive renormalized draws") {
    const std::vector<double> w{0.5, 0.3, 0.2};
    // enumerate the 6 ordered outcomes
    std::map<std::pair<std::size_t, std::size_t>, double> exact;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        if (a == b) continue;
        exact[{std::min(a, b), std::max(a, b)}] += w[a] * w[b] / (1 - w[a]);
      }
    }
    CHECK(exact[{0, 1}] == doctest::Approx(0.514286).epsilon(1e-6));
    const int N = 100000;
    std::map<std::pair<std::size_t, std::size_t>, int> hits;
    std::map<std::pair<std::size_t, std::size_t>, int> ordered;
    for (int i = 0; i < N; ++i) {
      auto s = sample_without_replacement(w, 2, rng);
      ++hits[{std::min(s[0], s[1]), std::max(s[0], s[1])}];
      ++ordered[{s[0], s[1]}];
    }
    for (auto& [key, p] : exact) {
      CHECK(std::abs(hits[key] / double(N) - p) < 3 * std::sqrt(p * (1 - p) / N));
    }
    // key order reproduces the order of successive draws
    const double p01 = w[0] * w[1] / (1 - w[0]);
    CHECK(std::abs(ordered[{0, 1}] / double(N) - p01) < 3 * std::sqrt(p01 * (1 - p01) / N));
  }
}

TEST_CASE("constant discomfort keeps DIG weights uniform") {
  auto ds = small_miller(60);
  auto prior = empirical_bayes_hyperparams(ds, 3);
  auto c = config_for(Method::dig, 200, 5, 8);
  c.discomfort.kind = DiscomfortKind::constant;
  c.discomfort.value = 0.7;
  double worst = 0.0;
  run_chain(ds, 3, prior, c, [&](const IterationView& v) {
    REQUIRE(v.alpha != nullptr);
    worst = std::max(worst, (v.alpha->array() - 1.0 / 60).abs().maxCoeff());
  });
  CHECK(worst < 1e-14);
}

TEST_CASE("boundary observation gets extra selection weight") {
  Dataset ds;
  const std::size_t n = 41;
  ds.x.resize(n, 1);
  Rng rng(12);
  for (std::size_t i = 0; i < 20; ++i) ds.x(static_cast<Eigen::Index>(i), 0) = -3.0 + 0.3 * rng.normal();
  for (std::size_t i = 20; i < 40; ++i) ds.x(static_cast<Eigen::Index>(i), 0) = 3.0 + 0.3 * rng.normal();
  ds.x(40, 0) = 0.0;
  auto prior = empirical_bayes_hyperparams(ds, 2);
  auto c = config_for(Method::dig, 400, 2, 4);
  const std::size_t s = transition_point(n, 2, 2);
  double sum = 0.0;
  std::size_t count = 0;
  auto trace = run_chain(ds, 2, prior, c, [&](const IterationView& v) {
    if (v.t <= s) {
      sum += (*v.alpha)[40];
      ++count;
    }
  });
  CHECK(trace.transition_point == s);
  CHECK(sum / count > 1.0 / n);
}

TEST_CASE("configuration checks") {
  SamplerConfig c;
  c.m = 11;
  CHECK_THROWS(c.validate(10));
  c.m = 5;
  c.iterations = 0;
  CHECK_THROWS(c.validate(10));
  c.iterations = 10;
  CHECK_NOTHROW(c.validate(10));
}
