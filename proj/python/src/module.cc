#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "qshare/experiments.h"
#include "qshare/sim.h"

namespace py = pybind11;
using namespace qshare;

namespace {

std::string describe(const ConfigError &e) {
    std::string msg = "invalid config";
    for (const auto &v : e.violations()) {
        msg += "\n  " + v.field + ": " + v.message;
    }
    return msg;
}

ScenarioConfig parse(const std::string &document) {
    try {
        return load_config(document);
    } catch (const ConfigError &e) {
        throw py::value_error(describe(e));
    }
}

DeviceProfile device(const std::string &device_json) {
    try {
        return device_from_json(Json::parse(device_json));
    } catch (const ConfigError &e) {
        throw py::value_error(describe(e));
    } catch (const Json::exception &e) {
        throw py::value_error(e.what());
    }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-tenant quantum cloud attack and defense simulator";

    py::class_<Circuit>(m, "Circuit")
        .def(py::init<std::string, uint32_t>(), py::arg("name"), py::arg("n_qubits"))
        .def_readonly("name", &Circuit::name)
        .def_readonly("n_qubits", &Circuit::n_qubits)
        .def("x", &Circuit::x, py::return_value_policy::reference_internal)
        .def("h", &Circuit::h, py::return_value_policy::reference_internal)
        .def("ry", &Circuit::ry, py::return_value_policy::reference_internal)
        .def("cnot", &Circuit::cnot, py::return_value_policy::reference_internal)
        .def("ccx", &Circuit::ccx, py::return_value_policy::reference_internal)
        .def("swap", &Circuit::swap, py::return_value_policy::reference_internal)
        .def("depth", &Circuit::depth)
        .def("gate_count", [](const Circuit &c) { return c.gates.size(); })
        .def("__str__", &Circuit::str);

    m.def("circuit_from_spec", &circuit_from_spec, py::arg("spec"));
    m.def("statevector", &statevector, py::arg("circuit"));
    m.def("builtin_device_names", &builtin_device_names);

    m.def(
        "simulate",
        [](const Circuit &c, const std::string &device_json, uint64_t shots, uint64_t seed, bool crosstalk,
           bool sensing, bool readout) {
            RunSpec spec;
            spec.circuit = c;
            spec.device = device(device_json);
            spec.shots = shots;
            spec.seed = seed;
            spec.noise = {crosstalk, sensing, readout, false};
            Histogram h;
            {
                py::gil_scoped_release release;
                h = run(spec);
            }
            return h.counts();
        },
        py::arg("circuit"), py::arg("device_json"), py::arg("shots"), py::arg("seed"), py::arg("crosstalk") = true,
        py::arg("sensing") = true, py::arg("readout") = true);

    m.def(
        "normalize_config", [](const std::string &document) { return serialize(parse(document)); },
        py::arg("document"));

    // Returns (results JSON text, passed, summary text).
    m.def(
        "run_config",
        [](const std::string &document, std::optional<uint64_t> seed, std::optional<std::string> out,
           size_t threads) {
            auto cfg = parse(document);
            if (seed) {
                cfg.seed = *seed;
            }
            ReportBundle b;
            {
                py::gil_scoped_release release;
                b = run_scenario(cfg, {threads});
                if (out) {
                    write_bundle(b, *out);
                }
            }
            return py::make_tuple(b.results.dump(), b.passed(), b.summary);
        },
        py::arg("document"), py::arg("seed") = py::none(), py::arg("out") = py::none(), py::arg("threads") = 1);
}
