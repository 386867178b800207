#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "damplqr/data.hpp"
#include "damplqr/json_io.hpp"
#include "damplqr/linalg.hpp"
#include "damplqr/model_based.hpp"
#include "damplqr/offpolicy_pi.hpp"
#include "damplqr/qlearning.hpp"

namespace py = pybind11;

namespace {

using namespace damplqr;

py::object json_to_py(const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      py::dict d;
      for (const auto& [key, value] : j.items())
        d[py::str(key)] = json_to_py(value);
      return d;
    }
    case Json::value_t::array: {
      py::list l;
      for (const Json& item : j) l.append(json_to_py(item));
      return l;
    }
    case Json::value_t::string:
      return py::str(j.get<std::string>());
    case Json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case Json::value_t::number_integer:
      return py::int_(j.get<long long>());
    case Json::value_t::number_unsigned:
      return py::int_(j.get<unsigned long long>());
    case Json::value_t::number_float:
      return py::float_(j.get<double>());
    default:
      return py::none();
  }
}

AlgoConfig make_config(double beta_init, double beta_ratio, double alpha0,
                       double frac_a, double eps) {
  AlgoConfig cfg;
  cfg.beta_schedule.beta_init = beta_init;
  cfg.beta_schedule.ratio = beta_ratio;
  cfg.alpha0 = alpha0;
  cfg.frac_a = frac_a;
  cfg.eps1 = eps;
  cfg.eps2 = eps;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Data-driven stabilizing and optimal state-feedback synthesis for "
      "unknown discrete-time linear systems";

  py::register_exception<RankError>(m, "RankError");
  py::register_exception<ConvergenceError>(m, "ConvergenceError");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<SamplePool>(m, "SamplePool")
      .def_readonly("n_x", &SamplePool::n_x)
      .def_readonly("n_u", &SamplePool::n_u)
      .def_readonly("seed", &SamplePool::seed)
      .def("__len__", &SamplePool::size)
      .def("save", [](const SamplePool& p, const std::string& path) {
        save_pool(p, path);
      })
      .def_static("load",
                  [](const std::string& path) { return load_pool(path); });

  m.def("spectral_radius", &spectral_radius, py::arg("m"));

  m.def(
      "solve_discrete_lyapunov",
      [](const Matrix& f, const Matrix& w) {
        return solve_discrete_lyapunov(f, SymMatrix::from_dense(w)).dense();
      },
      py::arg("f"), py::arg("w"));

  m.def(
      "solve_dare",
      [](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
         double tol) {
        const DareSolution sol =
            solve_dare({a, b}, CostWeights::checked(q, r), tol);
        return py::make_tuple(sol.P.dense(), sol.K);
      },
      py::arg("a"), py::arg("b"), py::arg("q"), py::arg("r"),
      py::arg("tol") = 1e-12);

  m.def(
      "optimal_q_matrix",
      [](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
         double tol) {
        const CostWeights w = CostWeights::checked(q, r);
        const DareSolution sol = solve_dare({a, b}, w, tol);
        return h_from_p({a, b}, w, sol.P).H.dense();
      },
      py::arg("a"), py::arg("b"), py::arg("q"), py::arg("r"),
      py::arg("tol") = 1e-12);

  m.def(
      "hewer_pi",
      [](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
         const Matrix& k0, double eps) {
        const PiResult res =
            hewer_pi({a, b}, CostWeights::checked(q, r), k0, eps);
        return py::make_tuple(res.P.dense(), res.K);
      },
      py::arg("a"), py::arg("b"), py::arg("q"), py::arg("r"), py::arg("k0"),
      py::arg("eps") = 1e-10);

  m.def(
      "collect",
      [](const Matrix& a, const Matrix& b, int n_samples, int reset_every,
         std::uint64_t seed, const std::string& noise) {
        return collect({a, b}, NoiseConfig::parse(noise, seed), n_samples,
                       reset_every);
      },
      py::arg("a"), py::arg("b"), py::arg("n_samples"),
      py::arg("reset_every") = 10, py::arg("seed") = 0,
      py::arg("noise") = "uniform:-1:1");

  m.def(
      "run_pi",
      [](const SamplePool& pool, const Matrix& q, const Matrix& r,
         double beta_init, double beta_ratio, double alpha0, double frac_a,
         double eps) {
        const SynthesisReport report =
            run_algorithm1(pool, CostWeights::checked(q, r),
                           make_config(beta_init, beta_ratio, alpha0, frac_a,
                                       eps));
        return json_to_py(report_to_json(report));
      },
      py::arg("pool"), py::arg("q"), py::arg("r"), py::arg("beta_init") = 0.9,
      py::arg("beta_ratio") = 0.5, py::arg("alpha0") = 1e-4,
      py::arg("frac_a") = 0.4, py::arg("eps") = 1e-5);

  m.def(
      "run_qlearn",
      [](const SamplePool& pool, const Matrix& q, const Matrix& r,
         double beta_init, double beta_ratio, double alpha0, double frac_a,
         double eps) {
        const SynthesisReport report =
            run_algorithm2(pool, CostWeights::checked(q, r),
                           make_config(beta_init, beta_ratio, alpha0, frac_a,
                                       eps));
        return json_to_py(report_to_json(report));
      },
      py::arg("pool"), py::arg("q"), py::arg("r"), py::arg("beta_init") = 0.9,
      py::arg("beta_ratio") = 0.5, py::arg("alpha0") = 1e-4,
      py::arg("frac_a") = 0.4, py::arg("eps") = 1e-5);
}
