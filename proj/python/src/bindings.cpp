#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "digmix/adaptation.hpp"
#include "digmix/datagen.hpp"
#include "digmix/diagnostics.hpp"
#include "digmix/errors.hpp"
#include "digmix/experiment.hpp"
#include "digmix/samplers.hpp"

namespace py = pybind11;
using namespace digmix;

namespace {

Dataset make_dataset(const Matrix& x, std::optional<Labels> labels) {
  Dataset data{x, std::move(labels)};
  data.validate();
  return data;
}

py::dict trace_to_dict(const ChainTrace& trace) {
  const auto T = trace.records.size();
  std::vector<double> cll(T), lambda(T), ess(T), g(T);
  std::vector<std::int64_t> wall(T);
  std::vector<std::size_t> occupied(T);
  for (std::size_t i = 0; i < T; ++i) {
    const auto& r = trace.records[i];
    cll[i] = r.cll;
    lambda[i] = r.lambda;
    ess[i] = r.ess;
    g[i] = r.g_weight;
    wall[i] = r.wall_clock_ns;
    occupied[i] = r.occupied;
  }
  py::dict d;
  d["method"] = to_string(trace.method);
  d["seed"] = trace.seed;
  d["cll"] = cll;
  d["wall_ns"] = wall;
  d["lambda"] = lambda;
  d["ess"] = ess;
  d["g_weight"] = g;
  d["occupied"] = occupied;
  d["z"] = trace.final_state.z;
  d["pi"] = trace.final_state.pi;
  d["mu"] = trace.final_state.mu;
  d["sigma2"] = trace.final_state.sigma2;
  d["transition_point"] = trace.transition_point;
  d["allocation_draws"] = trace.allocation_draws;
  d["warnings"] = trace.warnings;
  std::vector<std::vector<int>> snaps;
  for (const auto& [t, z] : trace.snapshots) snaps.push_back(z);
  d["snapshots"] = snaps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite Gaussian mixture Gibbs samplers with discomfort-informed scans";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("generate", [](const std::string& family, std::size_t n, std::size_t d, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.family = family == "miller"        ? Family::miller_harrison
                      : family == "motivating5" ? Family::motivating5
                      : family == "misspec4"    ? Family::misspec4
                                                : throw UsageError("unknown family " + family);
        spec.n = n;
        spec.d = d;
        spec.seed = seed;
        const Dataset data = generate(spec);
        return py::make_tuple(data.x, *data.labels);
      },
      py::arg("family"), py::arg("n"), py::arg("d") = 2, py::arg("seed") = 0);

  m.def("standardize", [](const Matrix& x) { return standardize(make_dataset(x, {})).first.x; });

  m.def("log_component_density",
        [](std::vector<double> x, std::vector<double> mu, std::vector<double> s2) {
          return log_component_density(x, mu, s2);
        });

  m.def("ess", [](std::vector<double> p, double lambda) { return ess(p, lambda); });
  m.def("solve_lambda", [](std::vector<double> p, double target, double bound) {
        const auto s = solve_lambda(p, target, bound);
        return py::make_tuple(s.lambda, s.ess, s.at_upper_bound);
      },
      py::arg("p"), py::arg("m"), py::arg("Lambda") = 100.0);
  m.def("weight_pair", [](std::size_t t, std::size_t s, double a) {
        return weight_pair(t, WeightSchedule{a, s});
      },
      py::arg("t"), py::arg("s"), py::arg("a") = 1.0);
  m.def("transition_point", [](std::size_t n, std::size_t K, std::size_t mm) {
    return transition_point(n, K, mm);
  });
  m.def("default_m", &default_m);

  m.def("run_chain",
        [](const Matrix& x, std::size_t K, const std::string& method, std::size_t iters,
           std::size_t subset, std::uint64_t seed, double lambda_max, std::size_t snapshot_every) {
          const Dataset data = make_dataset(x, {});
          SamplerConfig config;
          config.method = parse_method(method);
          config.iterations = iters;
          config.m = subset == 0 ? default_m(data.n()) : subset;
          config.seed = seed;
          config.lambda_max = lambda_max;
          config.snapshot_every = snapshot_every;
          const PriorSpec prior = empirical_bayes_hyperparams(data, K);
          ChainTrace trace;
          {
            py::gil_scoped_release release;
            trace = run_chain(data, K, prior, config);
          }
          return trace_to_dict(trace);
        },
        py::arg("x"), py::arg("K"), py::arg("method") = "dig", py::arg("iters") = 1000,
        py::arg("m") = 0, py::arg("seed") = 0, py::arg("lambda_max") = 100.0,
        py::arg("snapshot_every") = 10);

  m.def("adjusted_rand_index", [](std::vector<int> a, std::vector<int> b) {
    return adjusted_rand_index(a, b);
  });
  m.def("posterior_similarity_matrix", [](std::vector<std::vector<int>> snaps) {
    return posterior_similarity_matrix(snaps);
  });
  m.def("time_to_converge",
        [](std::vector<double> cll, std::vector<std::int64_t> wall, double ref_mean,
           double ref_var, std::size_t window) -> py::object {
          const auto r = time_to_converge(cll, wall, {ref_mean, ref_var}, window);
          if (!r.t2c_iteration) return py::none();
          return py::make_tuple(*r.t2c_iteration, *r.t2c_seconds);
        },
        py::arg("cll"), py::arg("wall_ns"), py::arg("ref_mean"), py::arg("ref_var"),
        py::arg("window") = 1000);
}
