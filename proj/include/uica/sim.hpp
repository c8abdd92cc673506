#pragma once

#include <string>
#include <vector>

#include "uica/backend.hpp"
#include "uica/block.hpp"
#include "uica/program.hpp"

namespace uica {

struct SimOptions {
    SimMode mode = SimMode::automatic;
    int alignment_offset = 0;
    Ablations ablations;
    bool record_events = false;   // keep the per-cycle timeline
    bool check_invariants = false;
    long min_cycles = 500;
    long min_iterations = 10;
    long progress_guard = 10000;  // cycles without retirement before aborting
};

struct TimelineEvent {
    long cycle;
    char stage;  // P predecode, D idq, I issue, S dispatch, C complete, R retire
    int instr;
    long iteration;
};

struct SimResult {
    double predicted_tp = 0.0;  // cycles per iteration
    long n = 0;                 // completed iterations
    long t = 0;                 // retire cycle, last instruction of iteration n
    long t_prime = 0;           // retire cycle, last instruction of iteration n/2
    long cycles = 0;
    SimMode mode_used = SimMode::loop;

    int n_ports = 0;
    std::vector<std::string> instr_texts;
    // timeline row per instruction; the second of a macro-fused pair folds
    // into the first instruction's row
    std::vector<int> instr_row;
    // average uops per steady-state iteration, [instruction][port]
    std::vector<std::vector<double>> port_usage;
    std::vector<long> iteration_retire_cycles;  // index 1..n
    std::vector<TimelineEvent> events;          // when record_events
};

// The throughput formula applied to a retire trace.
double tp_from_trace(long n, long t, long t_prime);

SimResult simulate(const BasicBlock& block, const InstrTable& table, const UarchConfig& config,
                   const SimOptions& options = {});

std::string render_port_table(const SimResult& result);
std::string render_timeline(const SimResult& result, long from_cycle, long to_cycle);

}  // namespace uica
