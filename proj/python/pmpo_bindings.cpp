// Python bindings. Configs and summaries cross the boundary as JSON text;
// the pmpo package wraps them in dicts.

#include "pmpo/em_exact.hpp"
#include "pmpo/errors.hpp"
#include "pmpo/experiment.hpp"
#include "pmpo/objectives.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pmpo;

namespace {

std::vector<std::string> validate_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    return {std::string("config is not valid JSON: ") + e.what()};
  }
  return parse_experiment(doc).violations;
}

std::string run_config(const std::string& text, std::optional<std::string> output_dir,
                       std::optional<std::vector<std::uint64_t>> seeds, bool quiet) {
  const auto parsed = parse_experiment(nlohmann::json::parse(text));
  if (!parsed.config) throw ConfigError(parsed.violations);
  RunOptions opts{std::move(output_dir), std::move(seeds), quiet};
  std::ostringstream log;
  ExperimentOutcome outcome;
  {
    py::gil_scoped_release release;
    outcome = run_experiment(*parsed.config, opts, log);
  }
  if (!quiet) py::print(log.str(), py::arg("end") = "");
  return outcome.summary.dump();
}

py::dict em_trajectory(const std::vector<double>& delta0, const std::vector<double>& f, double tau,
                       std::size_t max_iters) {
  EmOptions opts;
  opts.max_iters = max_iters;
  opts.keep_distributions = false;
  const auto t = run_em(DiscreteDistribution(delta0), DiscreteFunction(f), tau, opts);
  py::dict out;
  out["values"] = t.values;
  out["tv_changes"] = t.tv_changes;
  out["converged"] = t.converged;
  out["final"] = t.distributions.back().probs();
  return out;
}

py::tuple categorical_pmpo_loss(const std::vector<double>& logits, const std::vector<double>& ref_logits,
                                const std::vector<std::size_t>& accepted, const std::vector<std::size_t>& rejected,
                                double alpha, double beta) {
  const CategoricalPolicy theta(1, logits.size(), logits);
  const CategoricalPolicy ref(1, ref_logits.size(), ref_logits);
  LossSpec spec;
  spec.alpha = alpha;
  spec.beta = beta;
  Rng rng(0);  // closed-form KL draws nothing
  const auto r = pmpo_loss(PreferenceBatch<std::size_t>{0, accepted, rejected, std::nullopt}, theta, ref, spec, rng);
  return py::make_tuple(r.value, r.gradient.values());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Preference-based policy optimization core";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
  // ConfigError carries its violation list as an attribute.
  m.attr("ConfigError") = py::reinterpret_steal<py::object>(
      PyErr_NewException("pmpo._core.ConfigError", PyExc_ValueError, nullptr));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::list violations;
      for (const auto& v : e.violations()) violations.append(v);
      py::object type = py::module_::import("pmpo._core").attr("ConfigError");
      py::object exc = type(e.what());
      exc.attr("violations") = violations;
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("validate_config", &validate_config, py::arg("config_json"),
        "Every violation in a JSON config; empty when valid.");
  m.def("run_config", &run_config, py::arg("config_json"), py::arg("output_dir") = py::none(),
        py::arg("seeds") = py::none(), py::arg("quiet") = true, "Runs a config and returns summary.json text.");
  m.def("parse_seed_list", &parse_seed_list, py::arg("text"));

  m.def(
      "argmax_softmax",
      [](const std::vector<double>& prior, const std::vector<double>& f, double tau) {
        return argmax_softmax(DiscreteDistribution(prior), DiscreteFunction(f), tau).probs();
      },
      py::arg("prior"), py::arg("f"), py::arg("tau"));
  m.def(
      "logsumexp_bound",
      [](const std::vector<double>& prior, const std::vector<double>& f, double tau) {
        return logsumexp_bound(DiscreteDistribution(prior), DiscreteFunction(f), tau);
      },
      py::arg("prior"), py::arg("f"), py::arg("tau"));
  m.def("run_em", &em_trajectory, py::arg("delta0"), py::arg("f"), py::arg("tau"), py::arg("max_iters") = 10'000);
  m.def("categorical_pmpo_loss", &categorical_pmpo_loss, py::arg("logits"), py::arg("ref_logits"),
        py::arg("accepted"), py::arg("rejected"), py::arg("alpha") = 0.5, py::arg("beta") = 0.5,
        "Returns (value, gradient) of the preference loss for a single-condition categorical policy.");
}
