#include <pybind11/pybind11.h>

#include <string>

#include "ifs_sync/config.hpp"
#include "ifs_sync/errors.hpp"
#include "ifs_sync/experiment.hpp"
#include "ifs_sync/parallel.hpp"

namespace py = pybind11;
using namespace ifs_sync;

namespace {

ExperimentConfig parse(const std::string& text)
{
    return parse_config(std::string_view(text));
}

std::string compute(const std::string& config)
{
    const ExperimentConfig cfg = parse(config);
    py::gil_scoped_release release;
    return dump_json(compute_experiment(cfg).report);
}

std::string run(const std::string& config)
{
    const ExperimentConfig cfg = parse(config);
    py::gil_scoped_release release;
    return dump_json(to_json(run_experiment(cfg)));
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Random diffeomorphism systems on the circle and the sphere.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

    m.def("compute", &compute, py::arg("config"),
          "Run an experiment from a JSON config string; returns the report as JSON text.");
    m.def("run", &run, py::arg("config"),
          "Run an experiment and write its files; returns the manifest as JSON text.");
    m.def(
        "validate",
        [](const std::string& config) { return dump_json(to_json(parse(config))); },
        py::arg("config"), "Canonical form of a config, with defaults filled in.");
    m.def(
        "schema", [] { return dump_json(config_schema()); }, "JSON schema of the config format.");
    m.def("set_worker_count", &set_worker_count, py::arg("n"));
    m.def("worker_count", &worker_count);
    m.attr("__version__") = std::string(version());
}
