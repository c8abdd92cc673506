#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uica/errors.hpp"
#include "uica/eval.hpp"
#include "uica/sim.hpp"

namespace py = pybind11;
using namespace uica;

namespace {

SimMode mode_from_string(const std::string& m) {
    if (m == "loop") return SimMode::loop;
    if (m == "unroll") return SimMode::unroll;
    if (m == "auto") return SimMode::automatic;
    throw ValidationError("mode must be 'loop', 'unroll' or 'auto'");
}

std::vector<std::pair<double, double>> as_pairs(
    const std::vector<std::pair<double, double>>& pairs) {
    return pairs;
}

}  // namespace

PYBIND11_MODULE(_uica, m) {
    m.doc() = "Cycle-level throughput prediction for basic blocks on Intel Core pipelines";

    py::register_exception<ParseError>(m, "UicaParseError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<UnknownInstructionError>(m, "UnknownInstruction", PyExc_KeyError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);

    py::class_<InstrTable>(m, "InstrTable")
        .def_readonly("uarch", &InstrTable::uarch_name)
        .def("__len__", &InstrTable::size)
        .def("__contains__",
             [](const InstrTable& t, const std::string& key) { return t.find(key) != nullptr; });

    py::class_<UarchConfig>(m, "UarchConfig")
        .def_readonly("name", &UarchConfig::name)
        .def_readonly("issue_width", &UarchConfig::issue_width)
        .def_readonly("n_ports", &UarchConfig::n_ports)
        .def_readonly("rob_size", &UarchConfig::rob_size)
        .def_readonly("scheduler_size", &UarchConfig::scheduler_size)
        .def_readonly("idq_size", &UarchConfig::idq_size)
        .def_readonly("lsd_enabled", &UarchConfig::lsd_enabled)
        .def_readonly("loads_per_cycle", &UarchConfig::loads_per_cycle)
        .def_readonly("stores_per_cycle", &UarchConfig::stores_per_cycle);

    py::class_<BasicBlock>(m, "BasicBlock")
        .def("__len__", [](const BasicBlock& b) { return b.instructions.size(); })
        .def_property_readonly("ends_with_branch", &BasicBlock::ends_with_branch)
        .def_property_readonly("byte_size", &BasicBlock::byte_size)
        .def_property_readonly("texts", [](const BasicBlock& b) {
            std::vector<std::string> out;
            for (const auto& i : b.instructions) out.push_back(i.text);
            return out;
        });

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("predicted_tp", &SimResult::predicted_tp)
        .def_readonly("n", &SimResult::n)
        .def_readonly("t", &SimResult::t)
        .def_readonly("t_prime", &SimResult::t_prime)
        .def_readonly("cycles", &SimResult::cycles)
        .def_readonly("port_usage", &SimResult::port_usage)
        .def_property_readonly("mode",
                               [](const SimResult& r) {
                                   return r.mode_used == SimMode::loop ? "loop" : "unroll";
                               })
        .def("port_table", [](const SimResult& r) { return render_port_table(r); })
        .def("timeline",
             [](const SimResult& r, long from_cycle, long to_cycle) {
                 return render_timeline(r, from_cycle, to_cycle);
             },
             py::arg("from_cycle"), py::arg("to_cycle"));

    m.def("default_data_dir", &default_data_dir);
    m.def("load_instr_table", &load_instr_table, py::arg("path"));
    m.def("load_config", &load_config, py::arg("path"));
    m.def("serialize_instr_table", &serialize_instr_table, py::arg("table"));

    m.def("parse_block",
          [](const std::string& text, const InstrTable& table, int align) {
              return parse_block(text, table, align);
          },
          py::arg("text"), py::arg("table"), py::arg("align") = 0);

    m.def("simulate",
          [](const BasicBlock& block, const InstrTable& table, const UarchConfig& config,
             const std::string& mode, int align, bool trace, bool check) {
              SimOptions opt;
              opt.mode = mode_from_string(mode);
              opt.alignment_offset = align;
              opt.record_events = trace;
              opt.check_invariants = check;
              return simulate(block, table, config, opt);
          },
          py::arg("block"), py::arg("table"), py::arg("config"), py::arg("mode") = "auto",
          py::arg("align") = 0, py::arg("trace") = false, py::arg("check") = false);

    m.def("make_loop_variant",
          [](const BasicBlock& block, const InstrTable& table) -> py::object {
              auto r = make_loop_variant(block, table);
              if (!r) return py::none();
              return py::cast(*r);
          },
          py::arg("block"), py::arg("table"));

    m.def("filter_benchmark",
          [](const BasicBlock& block, const InstrTable& table, const UarchConfig& config) {
              FilterResult f = filter_benchmark(block, table, config);
              return py::make_tuple(f.keep, reject_reason_name(f.reason));
          },
          py::arg("block"), py::arg("table"), py::arg("config"));

    m.def("block_stats", [](const BasicBlock& b) {
        BlockStats s = block_stats(b);
        return py::make_tuple(s.n, s.m_r, s.m_w);
    });
    m.def("baseline_unroll",
          [](int n, int m_r, int m_w, const UarchConfig& c) {
              return baseline_unroll({n, m_r, m_w}, c);
          },
          py::arg("n"), py::arg("m_r"), py::arg("m_w"), py::arg("config"));
    m.def("baseline_loop",
          [](int n, int m_r, int m_w, const UarchConfig& c) {
              return baseline_loop({n, m_r, m_w}, c);
          },
          py::arg("n"), py::arg("m_r"), py::arg("m_w"), py::arg("config"));
    m.def("mape", [](const std::vector<std::pair<double, double>>& pairs) {
        return mape(as_pairs(pairs));
    });
    m.def("kendall_tau", [](const std::vector<std::pair<double, double>>& pairs) {
        KendallResult r = kendall_tau(as_pairs(pairs));
        return py::make_tuple(r.tau, r.degenerate);
    });
}
