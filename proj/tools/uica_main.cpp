#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uica/errors.hpp"
#include "uica/eval.hpp"
#include "uica/record_file.hpp"
#include "uica/sim.hpp"

using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFile = 2;
constexpr int kExitModel = 3;
constexpr int kExitInternal = 4;

struct ArchFiles {
    uica::InstrTable table;
    uica::UarchConfig config;
};

bool looks_like_path(const std::string& s) {
    return s.find('/') != std::string::npos || s.find(".cfg") != std::string::npos;
}

ArchFiles resolve_arch(const std::string& arch, const std::string& data_dir,
                       const std::string& table_override) {
    ArchFiles a;
    std::string cfg_path =
        looks_like_path(arch) ? arch : data_dir + "/configs/" + arch + ".cfg";
    a.config = uica::load_config(cfg_path);
    std::string tbl_path = table_override.empty()
                               ? data_dir + "/tables/" + a.config.name + ".tbl"
                               : table_override;
    a.table = uica::load_instr_table(tbl_path);
    return a;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw uica::ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

uica::SimMode parse_mode(const std::string& m) {
    if (m == "loop") return uica::SimMode::loop;
    if (m == "unroll") return uica::SimMode::unroll;
    if (m == "auto") return uica::SimMode::automatic;
    throw uica::ParseError("mode must be loop, unroll or auto");
}

const char* mode_name(uica::SimMode m) {
    switch (m) {
        case uica::SimMode::loop: return "loop";
        case uica::SimMode::unroll: return "unroll";
        default: return "auto";
    }
}

json result_to_json(const uica::SimResult& r, const std::string& arch, bool with_timeline) {
    json j;
    j["arch"] = arch;
    j["mode"] = mode_name(r.mode_used);
    j["predicted_tp"] = r.predicted_tp;
    j["n"] = r.n;
    j["t"] = r.t;
    j["t_prime"] = r.t_prime;
    j["cycles"] = r.cycles;
    json table = json::array();
    for (size_t i = 0; i < r.instr_texts.size(); i++) {
        json row;
        row["instruction"] = r.instr_texts[i];
        row["ports"] = r.port_usage[i];
        table.push_back(row);
    }
    j["port_table"] = table;
    if (with_timeline) {
        json events = json::array();
        for (const auto& e : r.events) {
            events.push_back({{"cycle", e.cycle},
                              {"stage", std::string(1, e.stage)},
                              {"instruction", e.instr},
                              {"iteration", e.iteration}});
        }
        j["timeline"] = events;
    }
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"uica: basic-block throughput prediction for Intel Core pipelines"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    std::string data_dir = uica::default_data_dir();
    app.add_option("--data", data_dir, "data directory with configs/ and tables/");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "predict the throughput of one block");
    std::string blockfile, arch, mode_str = "auto", table_override;
    int align = 0;
    bool trace = false, ports = false, as_json = false, check = false;
    analyze->add_option("blockfile", blockfile, "block listing file")->required();
    analyze->add_option("--arch", arch, "microarchitecture name or config path")->required();
    analyze->add_option("--mode", mode_str, "loop|unroll|auto (default auto)");
    analyze->add_option("--align", align, "alignment offset in a 64-byte line (0..63)");
    analyze->add_option("--table", table_override, "instruction table path override");
    analyze->add_flag("--trace", trace, "print the cycle timeline");
    analyze->add_flag("--ports", ports, "print the per-instruction port usage table");
    analyze->add_flag("--json", as_json, "machine-readable output");
    analyze->add_flag("--check", check, "run with invariant checks enabled");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate predictors against a suite");
    std::string suite_path, predictors_str = "uica,baseline", report_path, heatmap_path;
    std::string eval_mode_str = "loop";
    double bin_width = 0.5, cutoff = 10.0;
    eval->add_option("suite", suite_path, "benchmark suite file")->required();
    eval->add_option("--arch", arch, "microarchitecture name or config path")->required();
    eval->add_option("--mode", eval_mode_str, "loop|unroll (default loop)");
    eval->add_option("--predictors", predictors_str, "comma list: uica,baseline,file:<path>");
    eval->add_option("--report", report_path, "write the report here (default stdout)");
    eval->add_option("--heatmap", heatmap_path, "write a measured-vs-predicted bin matrix");
    eval->add_option("--bin-width", bin_width, "heatmap bin width in cycles");
    eval->add_option("--cutoff", cutoff, "heatmap range cutoff in cycles");
    eval->add_option("--table", table_override, "instruction table path override");

    // suite transforms
    auto* suite_cmd = app.add_subcommand("suite", "suite transformations");
    auto* loopify = suite_cmd->add_subcommand("loopify", "emit the loop-form variant suite");
    std::string suite_in, suite_out;
    loopify->add_option("input", suite_in, "input suite")->required();
    loopify->add_option("-o,--output", suite_out, "output suite")->required();
    loopify->add_option("--arch", arch, "microarchitecture name or config path")->required();
    loopify->add_option("--table", table_override, "instruction table path override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (analyze->parsed()) {
        ArchFiles a = resolve_arch(arch, data_dir, table_override);
        uica::BasicBlock block = uica::parse_block(read_file(blockfile), a.table, 0);
        uica::SimOptions opt;
        opt.mode = parse_mode(mode_str);
        opt.alignment_offset = align;
        opt.record_events = trace || as_json;
        opt.check_invariants = check;
        uica::SimResult r = uica::simulate(block, a.table, a.config, opt);
        if (as_json) {
            std::cout << result_to_json(r, a.config.name, trace).dump(2) << "\n";
        } else {
            printf("arch: %s   mode: %s\n", a.config.name.c_str(), mode_name(r.mode_used));
            printf("predicted throughput: %.2f cycles/iteration  (n=%ld, t=%ld, t'=%ld)\n",
                   r.predicted_tp, r.n, r.t, r.t_prime);
            if (ports || !trace) {
                printf("\nport usage (uops per iteration):\n%s",
                       uica::render_port_table(r).c_str());
            }
            if (trace) {
                long from = r.t_prime;
                long to = std::min(r.t_prime + 60, r.t);
                printf("\ntimeline (cycles %ld..%ld):\n%s", from, to,
                       uica::render_timeline(r, from, to).c_str());
            }
        }
        return 0;
    }

    if (eval->parsed()) {
        ArchFiles a = resolve_arch(arch, data_dir, table_override);
        auto suite = uica::load_suite(suite_path, a.table);
        for (const auto& w : suite.warnings) fprintf(stderr, "warning: %s\n", w.c_str());
        uica::EvalOptions opt;
        opt.mode = parse_mode(eval_mode_str);
        opt.predictors.clear();
        for (const auto& p : uica::split(predictors_str, ','))
            if (!uica::trim(p).empty()) opt.predictors.push_back(uica::trim(p));
        uica::EvalReport report = uica::run_eval(suite.records, a.table, a.config, opt);
        std::string text = uica::render_report(report);
        if (report_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(report_path, std::ios::binary);
            if (!out) throw uica::ParseError("cannot write report: " + report_path);
            out << text;
        }
        if (!heatmap_path.empty() && !report.predictors.empty()) {
            std::vector<std::pair<double, double>> mp;
            for (size_t i = 0; i < report.rows.size(); i++)
                mp.push_back({report.rows[i].measured, report.predictors[0].predictions[i]});
            auto bins = uica::heatmap_bins(mp, bin_width, cutoff);
            std::ofstream out(heatmap_path, std::ios::binary);
            if (!out) throw uica::ParseError("cannot write heatmap: " + heatmap_path);
            out << uica::render_heatmap(bins);
        }
        return 0;
    }

    if (loopify->parsed()) {
        ArchFiles a = resolve_arch(arch, data_dir, table_override);
        auto suite = uica::load_suite(suite_in, a.table);
        for (const auto& w : suite.warnings) fprintf(stderr, "warning: %s\n", w.c_str());
        std::vector<uica::BenchmarkRecord> out_records;
        int no_register = 0;
        for (const auto& b : suite.records) {
            if (b.block.ends_with_branch()) continue;
            auto loop = uica::make_loop_variant(b.block, a.table);
            if (!loop) {
                no_register++;
                continue;
            }
            uica::BenchmarkRecord r = b;
            r.block = *loop;
            r.measured_tp.reset();  // measurements do not carry over
            out_records.push_back(std::move(r));
        }
        std::ofstream out(suite_out, std::ios::binary);
        if (!out) throw uica::ParseError("cannot write suite: " + suite_out);
        out << uica::serialize_suite(out_records, suite.suite_id + "_L");
        fprintf(stderr, "loopified %zu benchmarks (%d without a free register)\n",
                out_records.size(), no_register);
        return 0;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const uica::UnknownInstructionError& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitModel;
    } catch (const uica::ModelError& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitModel;
    } catch (const uica::ParseError& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitFile;
    } catch (const uica::ValidationError& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitFile;
    } catch (const std::exception& e) {
        fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
}
