#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "uica/frontend.hpp"
#include "uica/program.hpp"

namespace uica {

// Port-assignment bookkeeping shared by the renamer: outstanding
// not-yet-executed uops per port, plus the load-port alternation bit.
struct PortAssignState {
    std::vector<int> outstanding;
    bool load_alternation = false;  // false -> port 2 next, true -> port 3 next

    explicit PortAssignState(int n_ports) : outstanding(n_ports, 0) {}
};

// The port-assignment rule: single-port uops take their port; uops that can
// use exactly ports {2,3} alternate; everything else picks the least-loaded
// port (ties to the highest port number), with even issue slots going to
// P_min and odd slots to P_min', and P_min' collapsing onto P_min when they
// are at least 3 apart. The chosen port's outstanding counter increments.
int assign_port(PortAssignState& state, const PortSet& allowed, int issue_slot);

// Move-elimination slots: physical registers shared by several
// architectural registers, at most `slots` shared groups per class.
class ElimTracker {
  public:
    ElimTracker(int gpr_slots, int vec_slots);

    int free_slots(MoveElimClass cls) const;
    int occupied(MoveElimClass cls) const;
    // Removes a register from its alias group (register overwritten).
    void overwrite(Reg r);
    // dst joins src's group; requires the caller to have checked budget.
    // Returns false if a new group would be needed but no slot is free.
    bool eliminate(Reg dst, Reg src);

  private:
    struct ClassState {
        int slots;
        std::vector<int> group_of;   // per register index, -1 = private
        std::vector<int> group_size; // per group id
        int occupied = 0;
        int next_group = 0;
    };
    ClassState& cls_state(MoveElimClass cls);
    const ClassState& cls_state(MoveElimClass cls) const;
    ClassState gpr_, vec_;
};

struct DynUop {
    int instr = 0;
    int comp = 0;
    long iteration = 1;
    UopRole role = UopRole::compute;
    PortSet allowed;
    int port = -1;
    int latency = 1;
    long issue_cycle = 0;
    long earliest_dispatch = 0;  // issue + dispatch delay, and static inputs
    long dispatch_cycle = -1;
    long complete_cycle = -1;
    std::vector<int32_t> producers;  // arena indices that must complete first
    int32_t fwd_store = -1;          // forwarding store-data uop, or -1
};

struct RobEntry {
    int instr = 0;
    long iteration = 1;
    int fused_index = 0;
    long issue_cycle = 0;
    long complete_cycle = 0;          // for entries with no scheduler uops
    std::vector<int32_t> comps;       // arena indices
    int rob_slots = 1;
    int fused_share = 1;  // 0 for the second half of an unlaminated split
    bool is_iter_end = false;
};

struct DispatchRecord {
    int32_t iteration;
    int16_t instr;
    int8_t port;
};

using BackendEvent = std::function<void(char stage, long cycle, int instr, long iteration)>;

// Renamer + ROB + scheduler + retirement. Consumes fused uops from the IDQ
// (or from the locked LSD stream) and retires them in order.
class Backend {
  public:
    Backend(const BlockProgram& prog, SimMode mode, BackendEvent event = nullptr);

    void retire(long cycle);
    void dispatch(long cycle);
    void issue(long cycle, std::deque<FusedUopInstance>& idq, bool lsd_locked);

    long iterations_completed() const { return iterations_completed_; }
    const std::vector<long>& iteration_retire_cycles() const { return iter_retire_; }
    long last_retire_cycle() const { return last_retire_cycle_; }
    long issued_fused_uops() const { return issued_fused_; }
    long retired_fused_uops() const { return retired_fused_; }
    int rob_slots_used() const { return rob_slots_used_; }
    int scheduler_occupancy() const { return scheduler_occupancy_; }
    size_t rob_entries() const { return rob_.size(); }
    const std::vector<DispatchRecord>& dispatch_log() const { return dispatch_log_; }
    const PortAssignState& port_state() const { return ports_; }
    long lsd_stream_consumed() const { return lsd_consumed_; }

    // set by the driver for invariant instrumentation
    std::function<void(const DynUop&)> on_dispatch_check;

  private:
    struct RegState {
        int32_t producer = -1;  // arena index, -1 = available since `avail`
        long avail = 0;
    };

    void issue_one(long cycle, const StaticFusedUop& fu, long iteration, int& slot);
    RegState& reg_state(Reg r);
    void write_reg(Reg r, int32_t producer, long avail);
    int32_t new_uop(const StaticUop& su, const StaticFusedUop& fu, long iteration, long cycle,
                    int slot);

    const BlockProgram* prog_;
    const UarchConfig* cfg_;
    SimMode mode_;
    BackendEvent event_;

    std::vector<DynUop> arena_;
    std::deque<RobEntry> rob_;
    std::vector<std::vector<int32_t>> port_queues_;
    PortAssignState ports_;
    ElimTracker elim_;
    std::mt19937_64 rng_;

    std::vector<RegState> regs_;  // 32 canonical registers
    RegState flags_;
    std::map<std::pair<uint32_t, int64_t>, int32_t> store_map_;  // addr expr -> std uop

    // per-instruction-instance tokens
    long tok_iteration_ = -1;
    int tok_instr_ = -1;
    std::vector<int32_t> tok_loads_;
    int32_t tok_compute_ = -1;

    int rob_slots_used_ = 0;
    int scheduler_occupancy_ = 0;
    // per class (gpr, vec): eliminations in the previous/current cycle and
    // the budget pinned at the start of the cycle
    int elims_last_[2] = {0, 0};
    int elims_this_[2] = {0, 0};
    int elim_budget_[2] = {0, 0};

    long issued_fused_ = 0;
    long retired_fused_ = 0;
    long iterations_completed_ = 0;
    long last_retire_cycle_ = 0;
    std::vector<long> iter_retire_;  // retire cycle of each iteration's last uop

    // LSD streaming state (iterations >= 2 when locked)
    long lsd_pos_ = 0;   // position within the unrolled ring
    long lsd_iter_ = 2;  // iteration of the next ring uop
    long lsd_consumed_ = 0;
    bool lsd_wrap_block_ = false;

    std::vector<DispatchRecord> dispatch_log_;
};

}  // namespace uica
