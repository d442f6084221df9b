#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ccnmig/scenario.hpp"

namespace py = pybind11;
using namespace ccnmig;

PYBIND11_MODULE(_ccnmig, m) {
    m.doc() = "VM migration over named content: core operations";

    py::class_<Name>(m, "Name")
        .def_static("parse", &Name::parse)
        .def("to_text", &Name::to_text)
        .def("is_prefix_of", &Name::is_prefix_of)
        .def("__len__", &Name::size)
        .def("__repr__", [](const Name& n) { return "Name('" + n.to_text() + "')"; })
        .def("__eq__", [](const Name& a, const Name& b) { return a == b; });

    m.def("make_nameless", [](py::bytes payload) {
        std::string s = payload;
        return make_nameless(Bytes(s.begin(), s.end()));
    });
    py::class_<ContentObject>(m, "ContentObject")
        .def_property_readonly("name",
                               [](const ContentObject& o) -> std::optional<std::string> {
                                   if (!o.name) return std::nullopt;
                                   return o.name->to_text();
                               })
        .def_property_readonly("payload", [](const ContentObject& o) {
            return py::bytes(reinterpret_cast<const char*>(o.payload.data()), o.payload.size());
        });
    m.def("encode_object", [](const ContentObject& o) {
        Bytes b = encode_content_object(o);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
    });
    m.def("decode_object", [](py::bytes wire) {
        std::string s = wire;
        return decode_content_object(Bytes(s.begin(), s.end()));
    });
    m.def("object_hash_hex",
          [](const ContentObject& o) { return compute_object_hash(o).to_hex(); });

    m.def("object_count", [](const std::string& config_json) {
        VmConfig cfg = VmConfig::from_json(config_json);
        cfg.validate();
        ObjectCount c = object_count(cfg);
        py::dict d;
        d["per_disk"] = c.per_disk;
        d["disk_total"] = c.disk_total;
        d["ram_pages"] = c.ram_pages;
        d["cpu_objects"] = c.cpu_objects;
        d["config_objects"] = c.config_objects;
        d["net_objects"] = c.net_objects;
        d["total"] = c.total;
        return d;
    });
    m.def("enumerate_names", [](const std::string& config_json) {
        VmConfig cfg = VmConfig::from_json(config_json);
        cfg.validate();
        std::vector<std::string> out;
        for (const Name& n : enumerate_names(cfg)) out.push_back(n.to_text());
        return out;
    });

    m.def("default_scenario", [] { return Scenario::small_default().to_json(); });
    m.def("run_scenario", [](const std::string& scenario_json) {
        return run_scenario(Scenario::from_json(scenario_json)).to_json();
    });
}
