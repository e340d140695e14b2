#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmod/constraints.hpp"
#include "qmod/persist.hpp"
#include "qmod/qualify.hpp"
#include "qmod/runner.hpp"

namespace py = pybind11;
using namespace qmod;

namespace {

py::dict artifact_dict(const Artifact& a) {
  py::dict d;
  d["kind"] = std::string(to_string(a.kind));
  d["content"] = a.content;
  d["digest"] = a.digest;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the qmod meta-modeling kernel";

  static py::exception<Error> qmod_error(m, "QmodError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(qmod_error.ptr(), py::make_tuple(std::string(to_string(e.code())), e.what()).ptr());
    }
  });

  py::class_<Session>(m, "Session")
      .def(py::init([](std::optional<std::string> bytes) {
             return bytes ? Session(deserialize(*bytes)) : Session();
           }),
           py::arg("model") = py::none())
      .def("execute_line", &Session::execute_line, py::arg("line"),
           "Runs one protocol line; returns the response followed by event lines")
      .def("drain_events", &Session::drain_events)
      .def("digest", [](const Session& s) { return digest(s.committed()); })
      .def("serialize", [](const Session& s) { return serialize(s.committed()); })
      .def("violations",
           [](const Session& s) {
             std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t, std::string>> out;
             for (const Violation& v : evaluate(s.view()))
               out.emplace_back(std::string(to_string(v.code)), v.element.value, v.constraint.value, v.message);
             return out;
           })
      .def("gen_docs", [](const Session& s, std::uint64_t root) { return artifact_dict(gen_docs(s.committed(), ElementId(root))); },
           py::arg("root") = 2)
      .def("gen_requirements",
           [](const Session& s, std::uint64_t root) { return artifact_dict(gen_requirements(s.committed(), ElementId(root))); },
           py::arg("root") = 2)
      .def("gen_tests", [](const Session& s, std::uint64_t root) { return artifact_dict(gen_tests(s.committed(), ElementId(root))); },
           py::arg("root") = 2)
      .def("gen_trace_report",
           [](const Session& s, std::uint64_t trace) { return artifact_dict(gen_trace_report(s.committed(), ElementId(trace))); })
      .def_property_readonly("in_transaction", &Session::in_transaction)
      .def_property_readonly("last_seq", &Session::last_seq);

  m.def(
      "run_script",
      [](const std::string& script, bool expect, std::optional<std::string> model) {
        Session session = model ? Session(deserialize(*model)) : Session();
        RunResult r = run_script(session, script, expect);
        std::vector<std::string> mismatches;
        for (const Mismatch& mm : r.mismatches) mismatches.push_back(format_mismatch(mm));
        py::dict d;
        d["transcript"] = r.transcript;
        d["mismatches"] = mismatches;
        d["exit_code"] = r.exit_code();
        d["digest"] = digest(session.committed());
        return d;
      },
      py::arg("script"), py::arg("expect") = true, py::arg("model") = py::none());
  m.def("gen_error_catalogue", [] { return artifact_dict(gen_error_catalogue()); });
  m.def("catalogue", [] {
    std::vector<std::string> out;
    for (const CatalogueEntry& e : catalogue()) out.emplace_back(e.name);
    return out;
  });
  m.def("sha256_hex", [](const std::string& b) { return sha256_hex(b); });
}
