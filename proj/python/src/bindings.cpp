#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qnet/hardware.hpp"
#include "qnet/layout.hpp"
#include "qnet/randreq.hpp"
#include "qnet/serialization.hpp"

namespace py = pybind11;
using namespace qnet;

namespace {

// Errors reach Python as QnetError(code, path, message).
py::object qnet_error_type;

py::list validate(const std::string& topology, const std::string& templates) {
    const Topology topo = import_topology(topology);
    const TemplateStore store = import_templates(templates);
    py::list out;
    for (const auto& e : cross_reference_violations(topo, store))
        out.append(py::make_tuple(e.code(), e.path(), e.message()));
    return out;
}

std::string layout(const std::string& topology, std::uint64_t seed, int max_iterations) {
    LayoutParams p;
    p.max_iterations = max_iterations;
    return export_layout(compute_layout(import_topology(topology), p, seed));
}

std::string simulate(const std::string& topology, const std::string& templates, const std::string& simulation,
                     std::optional<std::int64_t> seed, bool dark_counts) {
    const Topology topo = import_topology(topology);
    const TemplateStore store = import_templates(templates);
    SimulationDocument sim = import_simulation(simulation);
    if (seed) sim.config.seed = *seed;
    const auto bad = cross_reference_violations(topo, store);
    if (!bad.empty()) throw bad.front();
    SimulationOptions opts;
    opts.dark_counts = dark_counts;
    SimulationReport report;
    {
        py::gil_scoped_release release;
        report = run_simulation(topo, store, sim.config, opts);
    }
    return export_results(report);
}

}  // namespace

PYBIND11_MODULE(_qnet, m) {
    m.doc() = "Discrete-event quantum network simulation core.";

    qnet_error_type = py::reinterpret_borrow<py::object>(
        PyErr_NewException("qnet.QnetError", PyExc_ValueError, nullptr));
    m.attr("QnetError") = qnet_error_type;
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::tuple args = py::make_tuple(e.code(), e.path(), e.message());
            PyErr_SetObject(qnet_error_type.ptr(), args.ptr());
        }
    });

    m.def("propagation_delay", [](double distance_m, double light_speed_m_s) {
        return propagation_delay(ChannelParams{distance_m, 0, light_speed_m_s});
    }, py::arg("distance_m"), py::arg("light_speed_m_s") = kFiberLightSpeed,
       "One-way fiber delay in picoseconds.");

    m.def("transmission_probability", [](double distance_m, double attenuation_db_km) {
        return transmission_probability(ChannelParams{distance_m, attenuation_db_km});
    }, py::arg("distance_m"), py::arg("attenuation_db_km"));

    m.def("normalize_topology", [](const std::string& s) { return export_topology(import_topology(s)); },
          "Import then re-export a topology document in canonical form.");
    m.def("normalize_templates", [](const std::string& s) { return export_templates(import_templates(s)); });
    m.def("normalize_simulation", [](const std::string& s) { return export_simulation(import_simulation(s)); });
    m.def("default_templates", [] { return export_templates(TemplateStore::with_defaults()); });

    m.def("validate", &validate, py::arg("topology"), py::arg("templates"),
          "Cross-reference violations as (code, path, message) tuples.");
    m.def("layout", &layout, py::arg("topology"), py::arg("seed") = 0, py::arg("max_iterations") = 1000);
    m.def("simulate", &simulate, py::arg("topology"), py::arg("templates"), py::arg("simulation"),
          py::arg("seed") = py::none(), py::arg("dark_counts") = false,
          "Run a simulation and return the results document.");
}
