#pragma once

#include <map>
#include <string>
#include <vector>

namespace uica {

// Microarchitecture generations, oldest first. Ordinals order instruction
// availability (e.g. TZCNT needs HSW or later).
enum class UarchGen : int {
    SNB = 0,
    IVB = 1,
    HSW = 2,
    BDW = 3,
    SKL = 4,
    CLX = 5,
    ICL = 6,
    TGL = 7,
    RKL = 8,
};

int uarch_ordinal(const std::string& name);  // throws ParseError on unknown name
std::string uarch_gen_name(int ordinal);

enum class LsdUnrollVariant { none, A, B, C };

// One microarchitecture's parameter set. Values are data, loaded from a
// config file; load_config() enforces the documented ranges.
struct UarchConfig {
    std::string name;

    // front end
    int iq_size = 25;
    int predecode_width = 5;
    int lcp_penalty = 3;
    int idq_size = 64;
    int n_simple_decoders = 3;
    int decode_delivery_width = 5;   // uops/cycle from the decode unit to the IDQ
    bool fusible_to_last_decoder = true;
    int dsb_bandwidth = 6;           // uops/cycle
    int dsb_block_bytes = 32;        // 32 or 64
    int dsb_max_lines_per_block = 3;
    int dsb_line_slots = 6;
    bool dsb_both_halves_rule = false;  // 64-byte-line co-residency requirement
    bool jcc_erratum_workaround = false;
    int ms_delivery_width = 4;
    int ms_switch_penalty_decoder = 2;  // cycles, round trip
    int ms_switch_penalty_dsb = 2;      // cycles, round trip
    bool lsd_enabled = false;
    LsdUnrollVariant lsd_unroll_variant = LsdUnrollVariant::none;
    std::map<int, int> lsd_unroll_table;  // loop uop count -> unroll factor; overrides variant policy

    // back end
    int issue_width = 4;
    bool move_elim_gpr = false;
    bool move_elim_vec = false;
    int elim_slots_gpr = 4;
    int elim_slots_vec = 4;
    int rob_size = 224;
    int retire_width = 4;
    int scheduler_size = 97;
    int n_ports = 8;
    int dispatch_delay_min = 5;  // issue -> earliest dispatch
    int loads_per_cycle = 2;
    int stores_per_cycle = 1;    // symbol w in the baselines
    int load_latency = 4;        // L1 hit
    int store_forward_latency = 4;

    int ordinal() const { return uarch_ordinal(name); }

    // LSD unroll factor for a loop of `loop_uops` fused-domain uops.
    int lsd_unroll_factor(int loop_uops) const;
};

UarchConfig load_config(const std::string& path);
void validate_config(const UarchConfig& cfg);  // throws ValidationError

// Names of the configs bundled under <data>/configs.
std::vector<std::string> bundled_uarch_names();

// Resolves the bundled data directory: explicit argument, then the
// UICA_DATA_DIR environment variable, then the build-time source path.
std::string default_data_dir();

}  // namespace uica
