#include "dkf/cli.hpp"
#include "dkf/config.hpp"
#include "dkf/diffusion_combiner.hpp"
#include "dkf/errors.hpp"
#include "dkf/excitation_diagnostics.hpp"
#include "dkf/graph_topology.hpp"
#include "dkf/kalman_core.hpp"
#include "dkf/monte_carlo.hpp"
#include "dkf/output.hpp"
#include "dkf/property_suite.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace dkf;

namespace {

py::dict series_dict(const harness::TrackingErrorSeries& s) {
  py::dict d;
  d["ks"] = s.ks;
  d["mse"] = s.mse;
  d["std_error"] = s.std_error;
  return d;
}

py::dict suite_dict(const verify::SuiteResult& r) {
  py::dict d;
  d["name"] = r.name;
  d["instances"] = r.instances;
  d["failures"] = r.failures;
  d["worst"] = r.worst;
  d["tolerance"] = r.tolerance;
  d["metric"] = r.metric;
  d["passed"] = r.passed();
  return d;
}

kalman::SensorFilterState state_of(const Vector& theta_hat, const Matrix& P, double r,
                                   const Matrix& Q) {
  kalman::SensorFilterState s{theta_hat, P, r, Q};
  kalman::check_state(s);
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Diffusion distributed Kalman filter core";

  auto base = py::register_exception<Error>(m, "DkfError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<harness::ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("n", &harness::ExperimentConfig::n)
      .def_readonly("m", &harness::ExperimentConfig::m)
      .def_readonly("adjacency", &harness::ExperimentConfig::adjacency)
      .def_readwrite("horizon", &harness::ExperimentConfig::horizon)
      .def_readwrite("runs", &harness::ExperimentConfig::runs)
      .def_readwrite("record_stride", &harness::ExperimentConfig::record_stride)
      .def_readwrite("seed", &harness::ExperimentConfig::seed)
      .def_readwrite("workers", &harness::ExperimentConfig::workers)
      .def_readwrite("diag_h", &harness::ExperimentConfig::diag_h)
      .def_readwrite("diag_mc", &harness::ExperimentConfig::diag_mc)
      .def_property_readonly("mode",
                             [](const harness::ExperimentConfig& c) {
                               return std::string(harness::mode_name(c.mode));
                             })
      .def_property_readonly("hash", [](const harness::ExperimentConfig& c) {
        return harness::config_hash(c);
      });

  m.def("parse_config", &harness::parse_config, py::arg("text"));
  m.def("load_config", [](const std::string& path) { return harness::load_config(path); },
        py::arg("path"));
  m.def("bundled_fig1_config", [] { return std::string(harness::bundled_fig1_config()); });
  m.def("record_schedule", &harness::record_schedule, py::arg("horizon"), py::arg("stride"));

  py::class_<harness::RunArtifact>(m, "RunArtifact")
      .def_readonly("config_hash", &harness::RunArtifact::config_hash)
      .def_readonly("seed", &harness::RunArtifact::seed)
      .def_readonly("runs", &harness::RunArtifact::runs)
      .def_readonly("horizon", &harness::RunArtifact::horizon)
      .def_property_readonly("distributed",
                             [](const harness::RunArtifact& a) -> py::object {
                               if (!a.distributed) return py::none();
                               return series_dict(*a.distributed);
                             })
      .def_property_readonly("noncooperative",
                             [](const harness::RunArtifact& a) -> py::object {
                               if (!a.noncooperative) return py::none();
                               return series_dict(*a.noncooperative);
                             })
      .def("errors_csv", &harness::errors_csv);

  m.def("run_monte_carlo", &harness::run_monte_carlo, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "adapt",
      [](const Vector& theta_hat, const Matrix& P, double r, const Matrix& Q, const Vector& phi,
         double y) {
        const auto a = kalman::adapt(state_of(theta_hat, P, r, Q), phi, y);
        return py::make_tuple(a.theta_bar, a.P_bar, a.gain);
      },
      py::arg("theta_hat"), py::arg("P"), py::arg("r"), py::arg("Q"), py::arg("phi"), py::arg("y"),
      "One adapt step; returns (theta_bar, P_bar, gain).");

  m.def(
      "combine",
      [](const std::vector<Vector>& theta_bar, const std::vector<Matrix>& P_bar,
         const Matrix& adjacency) {
        if (theta_bar.size() != P_bar.size()) {
          throw DimensionError("combine: theta_bar and P_bar lengths differ");
        }
        std::vector<kalman::AdaptResult> in;
        for (std::size_t i = 0; i < theta_bar.size(); ++i) {
          in.push_back({theta_bar[i], P_bar[i], Vector::Zero(theta_bar[i].size())});
        }
        py::list out;
        for (const auto& c : diffusion::combine(in, graph::AdjacencyMatrix(adjacency))) {
          out.append(py::make_tuple(c.theta_hat, c.P));
        }
        return out;
      },
      py::arg("theta_bar"), py::arg("P_bar"), py::arg("adjacency"),
      "Covariance-intersection combine; returns [(theta_hat, P)] per sensor.");

  m.def(
      "validate_graph",
      [](const Matrix& adjacency) {
        const auto r = graph::validate(graph::AdjacencyMatrix(adjacency));
        py::dict d;
        d["nonnegative"] = r.nonnegative;
        d["balanced"] = r.balanced;
        d["strongly_connected"] = r.strongly_connected;
        d["ok"] = r.ok();
        return d;
      },
      py::arg("adjacency"));
  m.def("diameter", [](const Matrix& a) { return graph::diameter(graph::AdjacencyMatrix(a)); },
        py::arg("adjacency"));
  m.def("a_min", [](const Matrix& a) { return graph::a_min(graph::AdjacencyMatrix(a)); },
        py::arg("adjacency"));

  m.def(
      "estimate_lambda",
      [](const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& innovation_cov,
         const Vector& x0, int h, int mc, std::uint64_t seed) {
        signal::GeneratorMatrices g{A, B, C, innovation_cov};
        signal::check_dimensions(g, static_cast<int>(x0.size()));
        const signal::RegressorGenerator gen(g, x0, RandomStream(seed, {}));
        const auto e = diagnostics::estimate_lambda_single(gen, {h, mc, seed, 0});
        return py::make_tuple(e.value, e.std_error);
      },
      py::arg("A"), py::arg("B"), py::arg("C"), py::arg("innovation_cov"), py::arg("x0"),
      py::arg("h") = 5, py::arg("mc") = 1000, py::arg("seed") = 0,
      "Single-sensor excitation estimate from a frozen state; returns (lambda, std_error).");

  m.def(
      "verify",
      [](std::size_t instances, std::uint64_t seed) {
        py::list out;
        std::vector<verify::SuiteResult> results;
        {
          py::gil_scoped_release release;
          results = verify::run_all(instances, seed);
        }
        for (const auto& r : results) out.append(suite_dict(r));
        return out;
      },
      py::arg("instances") = 1000, py::arg("seed") = 1);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "dkf");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (exit_code, stdout, stderr).");
}
