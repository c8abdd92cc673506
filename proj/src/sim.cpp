#include "uica/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <map>

#include "uica/errors.hpp"
#include "uica/frontend.hpp"

namespace uica {

double tp_from_trace(long n, long t, long t_prime) {
    if (n <= 0 || t <= t_prime) throw ModelError("degenerate retire trace");
    return 2.0 * static_cast<double>(t - t_prime) / static_cast<double>(n);
}

SimResult simulate(const BasicBlock& block, const InstrTable& table, const UarchConfig& config,
                   const SimOptions& options) {
    SimMode mode = options.mode;
    if (mode == SimMode::automatic)
        mode = block.ends_with_branch() ? SimMode::loop : SimMode::unroll;

    BasicBlock aligned = block;
    aligned.alignment_offset = options.alignment_offset;
    BlockProgram prog = build_program(aligned, table, config, options.ablations);

    SimResult result;
    result.mode_used = mode;
    result.n_ports = config.n_ports;
    for (const auto& ins : aligned.instructions) result.instr_texts.push_back(ins.text);
    for (size_t i = 0; i < aligned.instructions.size(); i++)
        result.instr_row.push_back(prog.instrs[i].fused_into_prev ? static_cast<int>(i) - 1
                                                                  : static_cast<int>(i));

    FrontEndEvent fe_event;
    BackendEvent be_event;
    if (options.record_events) {
        auto sink = [&result](char stage, long cycle, int instr, long iteration) {
            result.events.push_back({cycle, stage, instr, iteration});
        };
        fe_event = sink;
        be_event = sink;
    }

    FrontEnd fe(prog, mode, fe_event);
    Backend be(prog, mode, be_event);
    std::deque<FusedUopInstance> idq;

    if (options.check_invariants) {
        be.on_dispatch_check = [&config](const DynUop& u) {
            if (u.dispatch_cycle < u.issue_cycle + config.dispatch_delay_min)
                throw ModelError("dispatch before issue + " +
                                 std::to_string(config.dispatch_delay_min));
        };
    }

    long cycle = 0;
    long last_progress = 0;
    while (true) {
        be.retire(cycle);
        be.dispatch(cycle);
        be.issue(cycle, idq, fe.lsd_locked());
        fe.step(cycle, idq);

        if (options.check_invariants) {
            if (static_cast<int>(idq.size()) > config.idq_size)
                throw ModelError("IDQ overflow");
            if (static_cast<int>(fe.iq_occupancy()) > config.iq_size)
                throw ModelError("IQ overflow");
            if (be.rob_slots_used() > config.rob_size) throw ModelError("ROB overflow");
            if (be.scheduler_occupancy() > config.scheduler_size)
                throw ModelError("scheduler overflow");
            for (int c : be.port_state().outstanding)
                if (c < 0) throw ModelError("negative port counter");
            // conservation: every issued fused uop was delivered by the front
            // end or streamed from the locked IDQ
            long streamed = fe.delivered_uops() + be.lsd_stream_consumed();
            if (be.issued_fused_uops() > streamed) throw ModelError("uop conservation violated");
            if (be.retired_fused_uops() > be.issued_fused_uops())
                throw ModelError("retired more uops than issued");
        }

        if (be.last_retire_cycle() > last_progress) last_progress = be.last_retire_cycle();
        if (cycle - last_progress > options.progress_guard)
            throw ModelError("no retirement for " + std::to_string(options.progress_guard) +
                             " cycles; the model cannot make progress on this block");

        if (cycle + 1 >= options.min_cycles &&
            be.iterations_completed() >= options.min_iterations)
            break;
        cycle++;
    }

    result.cycles = cycle + 1;
    result.n = be.iterations_completed();
    const auto& retires = be.iteration_retire_cycles();
    result.iteration_retire_cycles = retires;
    result.t = retires[result.n];
    result.t_prime = retires[result.n / 2];
    result.predicted_tp = tp_from_trace(result.n, result.t, result.t_prime);

    // steady-state port usage: iterations in (n/2, n]
    long lo = result.n / 2;
    long window = result.n - lo;
    result.port_usage.assign(aligned.instructions.size(),
                             std::vector<double>(config.n_ports, 0.0));
    for (const auto& d : be.dispatch_log()) {
        if (d.iteration > lo && d.iteration <= result.n)
            result.port_usage[d.instr][d.port] += 1.0;
    }
    for (auto& row : result.port_usage)
        for (double& v : row) v /= static_cast<double>(window);

    if (options.record_events)
        std::stable_sort(result.events.begin(), result.events.end(),
                         [](const TimelineEvent& a, const TimelineEvent& b) {
                             if (a.iteration != b.iteration) return a.iteration < b.iteration;
                             if (a.instr != b.instr) return a.instr < b.instr;
                             return a.cycle < b.cycle;
                         });
    return result;
}

std::string render_port_table(const SimResult& result) {
    std::string out;
    if (result.instr_texts.empty()) return out;
    char buf[64];
    size_t text_w = 12;
    for (const auto& t : result.instr_texts) text_w = std::max(text_w, t.size());
    out += std::string(text_w, ' ');
    for (int p = 0; p < result.n_ports; p++) {
        snprintf(buf, sizeof buf, " %6d", p);
        out += buf;
    }
    out += "\n";
    for (size_t i = 0; i < result.instr_texts.size(); i++) {
        out += result.instr_texts[i];
        out += std::string(text_w - result.instr_texts[i].size(), ' ');
        for (int p = 0; p < result.n_ports; p++) {
            double v = i < result.port_usage.size() ? result.port_usage[i][p] : 0.0;
            if (v == 0.0)
                snprintf(buf, sizeof buf, " %6s", "-");
            else
                snprintf(buf, sizeof buf, " %6.2f", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::string render_timeline(const SimResult& result, long from_cycle, long to_cycle) {
    std::string out;
    if (to_cycle < from_cycle || result.events.empty()) return out;
    from_cycle = std::max(from_cycle, 0L);
    to_cycle = std::min(to_cycle, result.cycles + 64);
    long width = to_cycle - from_cycle + 1;
    if (width <= 0 || width > 4000) return out;

    // one row per (iteration, instruction); a macro-fused pair shares a row
    std::map<std::pair<long, int>, std::string> rows;
    for (const auto& e : result.events) {
        if (e.cycle < from_cycle || e.cycle > to_cycle) continue;
        int row = e.instr < static_cast<int>(result.instr_row.size())
                      ? result.instr_row[e.instr]
                      : e.instr;
        auto key = std::make_pair(e.iteration, row);
        auto it = rows.find(key);
        if (it == rows.end())
            it = rows.emplace(key, std::string(width, '.')).first;
        it->second[e.cycle - from_cycle] = e.stage;
    }
    char buf[64];
    for (const auto& [key, line] : rows) {
        const std::string& text = key.second < static_cast<int>(result.instr_texts.size())
                                      ? result.instr_texts[key.second]
                                      : "?";
        snprintf(buf, sizeof buf, "it%-4ld %-24.24s |", key.first, text.c_str());
        out += buf;
        out += line;
        out += "|\n";
    }
    return out;
}

}  // namespace uica
