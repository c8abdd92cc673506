#pragma once

#include <string>
#include <vector>

#include "uica/block.hpp"
#include "uica/isa.hpp"
#include "uica/registers.hpp"
#include "uica/uarch.hpp"

namespace uica {

enum class SimMode { loop, unroll, automatic };

// Model-ablation switches. All off = the full model.
struct Ablations {
    bool unbounded_front_end = false;
    bool random_port_assignment = false;
    uint64_t random_port_seed = 0;
    bool no_micro_fusion = false;
    bool no_macro_fusion = false;
    bool no_lsd_unroll = false;
    bool no_move_elimination = false;
};

enum class UopRole { compute, load, store_addr, store_data };

// One scheduler-level (unfused-domain) uop.
struct StaticUop {
    UopRole role = UopRole::compute;
    PortSet ports;
    int latency = 1;  // loads use the config's load latency at run time

    RegSet in_regs;
    bool in_flags = false;
    bool in_load_token = false;     // waits for this instruction's load result
    bool in_compute_token = false;  // store data produced by this instruction
    int mem_read_index = -1;        // index into owning instruction's mem reads
    int mem_write_index = -1;       // index into owning instruction's mem writes

    RegSet out_regs;
    bool out_flags = false;
};

// One fused-domain uop as delivered into the IDQ.
struct StaticFusedUop {
    int first_instr = 0;  // owning instruction index within the block
    int n_instrs = 1;     // 2 for a macro-fused pair
    std::vector<StaticUop> comps;
    bool unlaminates = false;
    int dsb_slots = 1;
    bool from_ms = false;  // delivered by the microcode sequencer

    enum class Kind { normal, nop, zero_idiom, move };
    Kind kind = Kind::normal;
    // move candidates keep their executable uop in comps for the
    // not-eliminated case
    MoveElimClass move_class = MoveElimClass::none;
    Reg move_src{RegClass::gpr, 0};
    Reg move_dst{RegClass::gpr, 0};

    RegSet writes;  // architectural registers written (alias-group release)
};

struct InstrProgramInfo {
    int first_fused = 0;
    int n_fused = 0;
    bool fused_into_prev = false;  // second element of a macro-fused pair
    int ms_uops = 0;
    bool requires_complex = false;
    int simple_alongside = 0;  // resolved against the config
    bool fusible_first = false;
    bool dsb_ok = true;  // uops servable from the DSB (loop mode layout)
};

// Static expansion of a basic block against one table and config: fused
// uops in program order for one iteration, plus front-end classification.
struct BlockProgram {
    const BasicBlock* block = nullptr;
    const UarchConfig* config = nullptr;
    Ablations ablations;

    std::vector<StaticFusedUop> fused;
    std::vector<InstrProgramInfo> instrs;
    std::vector<int> fused_of_instr;  // flat index of each instr's first fused uop

    int total_fused_uops = 0;   // per iteration (effective, after fusion choices)
    int dsb_prefix_instrs = 0;  // instructions [0, p) servable from the DSB
    bool lsd_eligible = false;
    int lsd_unroll = 1;
};

BlockProgram build_program(const BasicBlock& block, const InstrTable& table,
                           const UarchConfig& config, const Ablations& ablations = {});

// DSB cacheability per aligned code region of config.dsb_block_bytes bytes:
// region index -> cacheable. Regions are indexed by byte offset / block size.
struct DsbClassification {
    int block_bytes = 32;
    std::vector<int> region_index;     // regions that contain instruction ends
    std::vector<bool> region_cacheable;
    std::vector<bool> instr_cacheable;  // per instruction of the block

    bool region_ok(int index) const;
};

DsbClassification dsb_classify(const BasicBlock& block, const InstrTable& table,
                               const UarchConfig& config);

}  // namespace uica
