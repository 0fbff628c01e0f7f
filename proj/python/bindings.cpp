// Python module: experiment runner and small analysis helpers.
#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fictsolve/error.hpp"
#include "fictsolve/experiments.hpp"

namespace py = pybind11;
using namespace fictsolve;

namespace {

ExperimentConfig config_from(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "fictitious-domain saddle-point solvers and spectral analysis";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from(config_json);
        std::ostringstream log;
        int status;
        {
          py::gil_scoped_release release;
          status = run_experiment(cfg, log);
        }
        return py::make_tuple(status, log.str());
      },
      py::arg("config_json"), "Run one experiment from a JSON config; returns (status, log).");

  m.def(
      "normalize_config",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from(config_json);
        cfg.validate();
        return cfg.to_json().dump();
      },
      py::arg("config_json"), "Validated config with all defaults filled in, as JSON.");

  m.def("parse_levels", &parse_levels, py::arg("text"));

  m.def(
      "sparsity_counts",
      [](int level, int facets, const std::string& layout) {
        const SparsityCounts c = sparsity_counts(level, facets, parse_layout(layout));
        py::dict d;
        d["n"] = c.n;
        d["m"] = c.m;
        d["l"] = c.l;
        d["A_GD"] = c.nnz_a_gd;
        d["A+BtB"] = c.nnz_a_btb;
        d["A_GD+CtC"] = c.nnz_a_gd_ctc;
        return d;
      },
      py::arg("level") = 3, py::arg("facets") = 33, py::arg("layout") = "closed");

  m.def(
      "mass_equivalence",
      [](int facets, double radius) {
        const MassEquivalence a = mass_equivalence(build_interface(InterfaceSpec::circle({0.5, 0.5}, radius, facets)));
        return py::make_tuple(a.ratio_min, a.ratio_max);
      },
      py::arg("facets"), py::arg("radius") = 0.21,
      "Extremal eigenvalues of (M^-2, M^-1 / h) for the multiplier mass matrix M of a circle.");

  m.def(
      "spectrum",
      [](const std::string& config_json) {
        ExperimentConfig cfg = config_from(config_json);
        cfg.experiment = ExperimentKind::spectrum;
        std::vector<SpectrumCase> cases;
        {
          py::gil_scoped_release release;
          cases = spectrum_study(cfg, false);
        }
        py::list out;
        for (const auto& c : cases) {
          py::dict d;
          d["gamma"] = c.gamma;
          d["dimension"] = c.dimension;
          d["lambda_min_pos"] = c.preconditioned.lambda_min_pos;
          d["n_zero"] = c.preconditioned.n_zero;
          d["n_at_one"] = c.preconditioned.n_at_one;
          d["eigenvalues"] = c.preconditioned.eigenvalues;
          out.append(d);
        }
        return out;
      },
      py::arg("config_json"), "Preconditioned spectra, one entry per gamma.");
}
