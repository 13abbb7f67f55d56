#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "apdet/errors.hpp"
#include "apdet/experiment.hpp"
#include "apdet/fractal.hpp"
#include "apdet/limits.hpp"
#include "apdet/models.hpp"

namespace py = pybind11;
using namespace apdet;

namespace {

MatrixSymbol scalar_symbol(const std::map<std::int64_t, cplx>& coeffs) {
  return MatrixSymbol::scalar(coeffs);
}

py::dict run(const std::string& kind, const std::string& config, unsigned threads, bool force) {
  const auto j = nlohmann::json::parse(config);
  const auto found = validate(kind, j);
  py::list findings;
  for (const auto& f : found) {
    findings.append(py::make_tuple(f.severity == Finding::Severity::error ? "error" : "warning", f.message));
  }
  py::dict out;
  out["findings"] = findings;
  if (has_errors(found)) {
    out["status"] = 1;
    return out;
  }
  const ExperimentResult r = run_experiment(kind, j, RunOptions{threads, force});
  out["status"] = r.status;
  out["failure"] = r.failure;
  out["header"] = r.header;
  out["columns"] = r.columns;
  out["rows"] = r.rows;
  return out;
}

}  // namespace

PYBIND11_MODULE(apdet, m) {
  m.doc() = "Finite-section determinants of almost periodic operators";

  py::register_exception<Error>(m, "Error");

  m.def("version", &version);
  m.def("experiment_kinds", &experiment_kinds);
  m.def("run", &run, py::arg("kind"), py::arg("config"), py::arg("threads") = 1, py::arg("force") = false,
        "Validate and run an experiment given as a JSON string.");
  m.def("cf_denominators", &cf_denominators, py::arg("x"), py::arg("m"));
  m.def(
      "winding_number",
      [](const std::map<std::int64_t, cplx>& c) { return winding_number(scalar_symbol(c)); },
      py::arg("coeffs"));
  m.def(
      "log_det_G", [](const std::map<std::int64_t, cplx>& c) { return log_det_G(scalar_symbol(c)); },
      py::arg("coeffs"), "G for a scalar Laurent polynomial {k: a_k}.");
  m.def(
      "szego_ratio",
      [](const std::map<std::int64_t, cplx>& c, std::int64_t n, int K) {
        const auto f = scalar_log_factorize(scalar_symbol(c), K);
        return ratio_flow(f.factorization, {{0, n}}, Normalization::g_power).front().ratio;
      },
      py::arg("coeffs"), py::arg("n"), py::arg("K") = 64,
      "det T_n(a) / G^n for a scalar symbol with winding number 0.");
}
