#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "uica/program.hpp"

namespace uica {

enum class DeliverySource { decoders, dsb, ms, lsd };

// One instruction instance on its way through predecode. Offsets are byte
// positions within the fetched stream; fetch_block is a virtual 16-byte
// block counter that advances by at most one block per cycle.
struct FetchedInstr {
    int instr = 0;       // static index within the block
    long iteration = 1;  // 1-based
    long fetch_block = 0;  // block in which the instruction ends
    int span_blocks = 0;   // end block minus start block
    bool lcp = false;
    bool lcp_paid = false;
    bool opcode_in_start_block = false;  // primary opcode before the first boundary
};

// The predecoder: walks 16-byte fetch blocks (at most one new block per
// cycle), emits at most predecode_width instructions per cycle, charges
// instructions to the block in which they end, pays the LCP penalty, and
// models the boundary-crossing penalty after full-width cycles.
class Predecoder {
  public:
    explicit Predecoder(const UarchConfig& cfg) : cfg_(&cfg) {}

    // One cycle: consumes from `pending`, appends emitted instructions to
    // `out` (at most min(predecode_width, iq_free)). Returns emitted count.
    int step(std::deque<FetchedInstr>& pending, int iq_free, std::vector<FetchedInstr>& out);

    bool stalled() const { return stall_ > 0; }
    long current_block() const { return cur_block_; }

  private:
    const UarchConfig* cfg_;
    int stall_ = 0;
    long cur_block_ = -1;
};

// Decode-group formation: which IQ-head entries decode this cycle.
struct DecodeGroupEntry {
    int iq_items = 1;  // IQ entries consumed (2 for a macro-fused pair)
    int instr = 0;     // static index of the first instruction
    long iteration = 1;
    int fused_begin = 0;  // range into program.fused delivered by the decoders
    int fused_end = 0;    // exclusive; MS uops of the instruction excluded
    bool starts_ms = false;
};

// `upstream_pending` = more instructions will arrive in the IQ (a fusible
// head may wait for its branch partner).
std::vector<DecodeGroupEntry> form_decode_group(const BlockProgram& prog,
                                                const std::deque<FetchedInstr>& iq,
                                                bool upstream_pending);

struct FusedUopInstance {
    int fused_index = 0;  // into program.fused
    long iteration = 1;
    DeliverySource source = DeliverySource::decoders;
};

// Pipeline event callback: stage tag, cycle, instruction, iteration.
using FrontEndEvent = std::function<void(char stage, long cycle, int instr, long iteration)>;

// The integrated front end: fetch/predecode -> IQ -> decoders, with DSB,
// MS and LSD delivery into the IDQ. One instance per simulation.
class FrontEnd {
  public:
    FrontEnd(const BlockProgram& prog, SimMode mode, FrontEndEvent event = nullptr);

    // One cycle; appends delivered uops to the IDQ (bounded by idq_size).
    void step(long cycle, std::deque<FusedUopInstance>& idq);

    bool lsd_locked() const { return lsd_locked_; }
    long delivered_uops() const { return delivered_; }
    long iterations_delivered() const { return iterations_delivered_; }
    size_t iq_occupancy() const { return iq_.size(); }
    DeliverySource source() const { return source_; }

  private:
    void ensure_fetch_items();
    void start_iteration_plan();
    void deliver(std::deque<FusedUopInstance>& idq, long cycle, int fused_index,
                 DeliverySource src);
    void finish_uop(long cycle);
    bool idq_has_space(const std::deque<FusedUopInstance>& idq, int n) const;

    const BlockProgram* prog_;
    const UarchConfig* cfg_;
    SimMode mode_;
    FrontEndEvent event_;

    Predecoder predecoder_;
    std::deque<FetchedInstr> fetch_pending_;
    std::deque<FetchedInstr> iq_;

    DeliverySource source_ = DeliverySource::decoders;
    bool lsd_locked_ = false;
    long delivered_ = 0;
    long iterations_delivered_ = 0;

    // MS state
    bool ms_active_ = false;
    int ms_remaining_ = 0;
    int ms_penalty_after_ = 0;
    int stall_cycles_ = 0;

    // DSB stream position (loop mode, iterations >= 2)
    int dsb_pos_ = 0;          // next fused uop within the prefix
    int dsb_prefix_fused_ = 0; // fused uops owned by the DSB prefix

    // fetch generation
    long gen_iteration_ = 1;
    int gen_instr_ = 0;
    int gen_segment_first_ = 0;  // first instruction of the MITE segment
    long gen_virtual_base_ = 0;
    long gen_virtual_max_ = -1;
    bool gen_gated_ = false;  // waiting for the DSB prefix to finish

    long deliver_iteration_ = 1;  // iteration currently being delivered
    int delivered_in_iter_ = 0;   // fused uops delivered of that iteration
};

}  // namespace uica
