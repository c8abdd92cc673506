#include "uica/backend.hpp"

#include <algorithm>

#include "uica/errors.hpp"

namespace uica {

int assign_port(PortAssignState& state, const PortSet& allowed, int issue_slot) {
    int chosen;
    if (allowed.count() == 1) {
        chosen = allowed.single();
    } else if (allowed == PortSet::of({2, 3})) {
        chosen = state.load_alternation ? 3 : 2;
        state.load_alternation = !state.load_alternation;
    } else {
        int p_min = -1, p_min2 = -1;
        for (int p : allowed.ports()) {
            if (p >= static_cast<int>(state.outstanding.size())) continue;
            if (p_min < 0 || state.outstanding[p] < state.outstanding[p_min] ||
                (state.outstanding[p] == state.outstanding[p_min] && p > p_min)) {
                p_min2 = p_min;
                p_min = p;
            } else if (p_min2 < 0 || state.outstanding[p] < state.outstanding[p_min2] ||
                       (state.outstanding[p] == state.outstanding[p_min2] && p > p_min2)) {
                p_min2 = p;
            }
        }
        if (p_min2 < 0 || std::abs(p_min - p_min2) >= 3) p_min2 = p_min;
        chosen = (issue_slot % 2 == 0) ? p_min : p_min2;
    }
    state.outstanding[chosen]++;
    return chosen;
}

ElimTracker::ElimTracker(int gpr_slots, int vec_slots) {
    gpr_.slots = gpr_slots;
    gpr_.group_of.assign(kNumGpr, -1);
    vec_.slots = vec_slots;
    vec_.group_of.assign(kNumGpr, -1);
}

ElimTracker::ClassState& ElimTracker::cls_state(MoveElimClass cls) {
    return cls == MoveElimClass::vec ? vec_ : gpr_;
}
const ElimTracker::ClassState& ElimTracker::cls_state(MoveElimClass cls) const {
    return cls == MoveElimClass::vec ? vec_ : gpr_;
}

int ElimTracker::free_slots(MoveElimClass cls) const {
    const ClassState& s = cls_state(cls);
    return s.slots - s.occupied;
}

int ElimTracker::occupied(MoveElimClass cls) const { return cls_state(cls).occupied; }

void ElimTracker::overwrite(Reg r) {
    ClassState& s = cls_state(r.cls == RegClass::vec ? MoveElimClass::vec : MoveElimClass::gpr);
    int g = s.group_of[r.index];
    if (g < 0) return;
    s.group_of[r.index] = -1;
    s.group_size[g]--;
    if (s.group_size[g] == 1) s.occupied--;  // group no longer shared
}

bool ElimTracker::eliminate(Reg dst, Reg src) {
    if (dst == src) return true;  // self-move aliases trivially
    ClassState& s =
        cls_state(dst.cls == RegClass::vec ? MoveElimClass::vec : MoveElimClass::gpr);
    overwrite(dst);
    int g = s.group_of[src.index];
    if (g < 0) {
        if (s.occupied >= s.slots) return false;  // no free elimination slot
        g = s.next_group++;
        s.group_size.push_back(0);
        s.group_of[src.index] = g;
        s.group_size[g] = 1;
        s.occupied++;  // becomes shared below
    } else if (s.group_size[g] == 1) {
        if (s.occupied >= s.slots) return false;
        s.occupied++;
    }
    s.group_of[dst.index] = g;
    s.group_size[g]++;
    return true;
}

Backend::Backend(const BlockProgram& prog, SimMode mode, BackendEvent event)
    : prog_(&prog), cfg_(prog.config), mode_(mode), event_(std::move(event)),
      port_queues_(prog.config->n_ports), ports_(prog.config->n_ports),
      elim_(prog.config->elim_slots_gpr, prog.config->elim_slots_vec),
      rng_(prog.ablations.random_port_seed), regs_(32) {
    arena_.reserve(4096);
    iter_retire_.push_back(0);  // 1-based indexing
}

Backend::RegState& Backend::reg_state(Reg r) { return regs_[RegSet::bit_of(r)]; }

void Backend::write_reg(Reg r, int32_t producer, long avail) {
    regs_[RegSet::bit_of(r)] = {producer, avail};
}

void Backend::retire(long cycle) {
    int retired = 0;
    while (!rob_.empty() && retired < cfg_->retire_width) {
        RobEntry& e = rob_.front();
        bool done = true;
        long complete = e.complete_cycle;
        for (int32_t c : e.comps) {
            if (arena_[c].complete_cycle < 0 || arena_[c].complete_cycle > cycle) {
                done = false;
                break;
            }
            complete = std::max(complete, arena_[c].complete_cycle);
        }
        if (!done || complete > cycle) break;
        if (event_) event_('R', cycle, e.instr, e.iteration);
        retired_fused_ += e.fused_share;
        rob_slots_used_ -= e.rob_slots;
        last_retire_cycle_ = cycle;
        if (e.is_iter_end) {
            iterations_completed_++;
            iter_retire_.push_back(cycle);
        }
        rob_.pop_front();
        retired++;
    }
}

void Backend::dispatch(long cycle) {
    int loads = 0, stores = 0;
    for (int p = 0; p < cfg_->n_ports; p++) {
        auto& q = port_queues_[p];
        for (size_t i = 0; i < q.size(); i++) {
            DynUop& u = arena_[q[i]];
            if (cycle < u.earliest_dispatch) continue;
            if (u.role == UopRole::load && loads >= cfg_->loads_per_cycle) continue;
            if (u.role == UopRole::store_data && stores >= cfg_->stores_per_cycle) continue;
            bool ready = true;
            for (int32_t pr : u.producers) {
                if (arena_[pr].complete_cycle < 0 || arena_[pr].complete_cycle > cycle) {
                    ready = false;
                    break;
                }
            }
            // forwarding stores must have dispatched so the data time is known
            if (ready && u.fwd_store >= 0 && arena_[u.fwd_store].dispatch_cycle < 0)
                ready = false;
            if (!ready) continue;

            u.dispatch_cycle = cycle;
            switch (u.role) {
                case UopRole::load: {
                    long t = cycle + cfg_->load_latency;
                    if (u.fwd_store >= 0)
                        t = std::max(t, arena_[u.fwd_store].complete_cycle +
                                            cfg_->store_forward_latency);
                    u.complete_cycle = t;
                    loads++;
                    break;
                }
                case UopRole::store_data:
                    u.complete_cycle = cycle + 1;
                    stores++;
                    break;
                case UopRole::store_addr:
                    u.complete_cycle = cycle + 1;
                    break;
                case UopRole::compute:
                    u.complete_cycle = cycle + u.latency;
                    break;
            }
            ports_.outstanding[p]--;
            scheduler_occupancy_--;
            dispatch_log_.push_back({static_cast<int32_t>(u.iteration),
                                     static_cast<int16_t>(u.instr),
                                     static_cast<int8_t>(p)});
            if (event_) {
                event_('S', cycle, u.instr, u.iteration);
                event_('C', u.complete_cycle, u.instr, u.iteration);
            }
            if (on_dispatch_check) on_dispatch_check(u);
            q.erase(q.begin() + i);
            break;  // each port accepts one uop per cycle
        }
    }
}

int32_t Backend::new_uop(const StaticUop& su, const StaticFusedUop& fu, long iteration,
                         long cycle, int slot) {
    DynUop u;
    u.instr = fu.first_instr;
    u.comp = static_cast<int>(&su - fu.comps.data());
    u.iteration = iteration;
    u.role = su.role;
    u.allowed = su.ports;
    u.latency = su.role == UopRole::load ? cfg_->load_latency : su.latency;
    u.issue_cycle = cycle;
    u.earliest_dispatch = cycle + cfg_->dispatch_delay_min;

    // register and flag inputs
    for (Reg r : su.in_regs.regs()) {
        RegState& rs = reg_state(r);
        if (rs.producer >= 0)
            u.producers.push_back(rs.producer);
        else
            u.earliest_dispatch = std::max(u.earliest_dispatch, rs.avail);
    }
    if (su.in_flags) {
        if (flags_.producer >= 0)
            u.producers.push_back(flags_.producer);
        else
            u.earliest_dispatch = std::max(u.earliest_dispatch, flags_.avail);
    }
    if (su.in_load_token)
        for (int32_t l : tok_loads_) u.producers.push_back(l);
    if (su.in_compute_token && tok_compute_ >= 0) u.producers.push_back(tok_compute_);

    // memory dependence: youngest older store with a provably equal address
    if (su.role == UopRole::load && su.mem_read_index >= 0) {
        const BlockInstruction& ins = prog_->block->instructions[fu.first_instr];
        int idx = 0;
        for (const auto& m : ins.mem_ops) {
            if (m.is_write) continue;
            if (idx == su.mem_read_index) {
                auto it = store_map_.find({m.regs.bits, m.displacement});
                if (it != store_map_.end()) u.fwd_store = it->second;
                break;
            }
            idx++;
        }
    }

    // port assignment happens at issue
    if (prog_->ablations.random_port_assignment && u.allowed.count() > 1) {
        auto ports = u.allowed.ports();
        u.port = ports[rng_() % ports.size()];
        ports_.outstanding[u.port]++;
    } else {
        u.port = assign_port(ports_, u.allowed, slot);
    }

    arena_.push_back(std::move(u));
    int32_t id = static_cast<int32_t>(arena_.size()) - 1;
    port_queues_[arena_[id].port].push_back(id);
    scheduler_occupancy_++;
    return id;
}

void Backend::issue_one(long cycle, const StaticFusedUop& fu, long iteration, int& slot) {
    issued_fused_++;
    if (event_) event_('I', cycle, fu.first_instr, iteration);

    if (tok_iteration_ != iteration || tok_instr_ != fu.first_instr) {
        tok_iteration_ = iteration;
        tok_instr_ = fu.first_instr;
        tok_loads_.clear();
        tok_compute_ = -1;
    }

    bool is_last = static_cast<size_t>(&fu - prog_->fused.data()) + 1 == prog_->fused.size();

    auto renamer_entry = [&](long complete) {
        RobEntry e;
        e.instr = fu.first_instr;
        e.iteration = iteration;
        e.fused_index = static_cast<int>(&fu - prog_->fused.data());
        e.issue_cycle = cycle;
        e.complete_cycle = complete;
        e.rob_slots = 1;
        e.is_iter_end = is_last;
        rob_.push_back(e);
        rob_slots_used_ += 1;
        slot += 1;
    };

    switch (fu.kind) {
        case StaticFusedUop::Kind::nop:
            renamer_entry(cycle);
            return;
        case StaticFusedUop::Kind::zero_idiom:
            for (Reg r : fu.writes.regs()) {
                elim_.overwrite(r);
                write_reg(r, -1, cycle);
            }
            renamer_entry(cycle);
            return;
        case StaticFusedUop::Kind::move: {
            bool enabled = fu.move_class == MoveElimClass::gpr ? cfg_->move_elim_gpr
                                                               : cfg_->move_elim_vec;
            int cls = fu.move_class == MoveElimClass::vec ? 1 : 0;
            if (!prog_->ablations.no_move_elimination && enabled &&
                elims_this_[cls] < elim_budget_[cls] &&
                elim_.eliminate(fu.move_dst, fu.move_src)) {
                elims_this_[cls]++;
                RegState src = reg_state(fu.move_src);
                regs_[RegSet::bit_of(fu.move_dst)] = src;  // dst aliases src
                renamer_entry(cycle);
                return;
            }
            break;  // not eliminated: issue the move's uop normally
        }
        case StaticFusedUop::Kind::normal:
            break;
    }

    // normal path: scheduler uops + ROB bookkeeping
    bool split = fu.unlaminates && fu.comps.size() == 2 && !prog_->ablations.no_micro_fusion;
    std::vector<int32_t> ids;
    int comp_slot = slot;
    for (const auto& su : fu.comps) {
        int32_t id = new_uop(su, fu, iteration, cycle, comp_slot);
        ids.push_back(id);
        if (split) comp_slot++;  // unlaminated components take their own issue slots
        if (su.role == UopRole::load) tok_loads_.push_back(id);
        if (su.role == UopRole::compute) tok_compute_ = id;
        // register outputs
        for (Reg r : su.out_regs.regs()) {
            elim_.overwrite(r);
            write_reg(r, id, 0);
        }
        if (su.out_flags) flags_ = {id, 0};
        // store bookkeeping
        if (su.role == UopRole::store_data && su.mem_write_index >= 0) {
            const BlockInstruction& ins = prog_->block->instructions[fu.first_instr];
            int idx = 0;
            for (const auto& m : ins.mem_ops) {
                if (!m.is_write) continue;
                if (idx == su.mem_write_index) {
                    store_map_[{m.regs.bits, m.displacement}] = id;
                    break;
                }
                idx++;
            }
        }
    }
    // registers written by the fused uop release their elimination aliases
    for (Reg r : fu.writes.regs()) {
        bool produced = false;
        for (const auto& su : fu.comps)
            if (su.out_regs.contains(r)) produced = true;
        if (!produced) {
            elim_.overwrite(r);
            write_reg(r, -1, cycle);
        }
    }
    // a register write ends forwarding from stores addressed through it
    if (!fu.writes.empty()) {
        for (auto it = store_map_.begin(); it != store_map_.end();) {
            RegSet rs;
            rs.bits = it->first.first;
            if (rs.intersects(fu.writes))
                it = store_map_.erase(it);
            else
                ++it;
        }
    }

    if (split) {
        for (size_t k = 0; k < ids.size(); k++) {
            RobEntry e;
            e.instr = fu.first_instr;
            e.iteration = iteration;
            e.fused_index = static_cast<int>(&fu - prog_->fused.data());
            e.issue_cycle = cycle;
            e.comps = {ids[k]};
            e.rob_slots = 1;
            e.fused_share = k == 0 ? 1 : 0;
            e.is_iter_end = is_last && k + 1 == ids.size();
            rob_.push_back(e);
            rob_slots_used_ += 1;
        }
        slot += 2;
    } else {
        RobEntry e;
        e.instr = fu.first_instr;
        e.iteration = iteration;
        e.fused_index = static_cast<int>(&fu - prog_->fused.data());
        e.issue_cycle = cycle;
        e.comps = ids;
        e.rob_slots = 1;
        e.is_iter_end = is_last;
        rob_.push_back(e);
        rob_slots_used_ += 1;
        slot += 1;
    }
}

void Backend::issue(long cycle, std::deque<FusedUopInstance>& idq, bool lsd_locked) {
    // elimination budget: available slots at cycle start, throttled by the
    // previous cycle's successful eliminations
    elims_this_[0] = elims_this_[1] = 0;
    elim_budget_[0] =
        std::min(elim_.free_slots(MoveElimClass::gpr), cfg_->elim_slots_gpr - elims_last_[0]);
    elim_budget_[1] =
        std::min(elim_.free_slots(MoveElimClass::vec), cfg_->elim_slots_vec - elims_last_[1]);
    int slot = 0;
    long ring = static_cast<long>(prog_->fused.size()) * prog_->lsd_unroll;
    lsd_wrap_block_ = false;

    while (slot < cfg_->issue_width) {
        const StaticFusedUop* fu = nullptr;
        long iteration = 0;
        bool from_ring = false;
        if (!idq.empty()) {
            fu = &prog_->fused[idq.front().fused_index];
            iteration = idq.front().iteration;
        } else if (lsd_locked) {
            if (lsd_wrap_block_) break;  // next unrolled iteration starts next cycle
            fu = &prog_->fused[lsd_pos_ % prog_->fused.size()];
            iteration = lsd_iter_;
            from_ring = true;
        } else {
            break;
        }

        bool split = fu->unlaminates && fu->comps.size() == 2 &&
                     !prog_->ablations.no_micro_fusion;
        int need_slots = split ? 2 : 1;
        if (slot + need_slots > cfg_->issue_width) break;
        int need_rob = split ? 2 : 1;
        int need_sched = static_cast<int>(fu->comps.size());
        if (fu->kind != StaticFusedUop::Kind::normal &&
            fu->kind != StaticFusedUop::Kind::move)
            need_sched = 0;
        if (rob_slots_used_ + need_rob > cfg_->rob_size) break;
        if (scheduler_occupancy_ + need_sched > cfg_->scheduler_size) break;

        if (!from_ring) {
            idq.pop_front();
        } else {
            lsd_pos_++;
            lsd_consumed_++;
            if (lsd_pos_ % prog_->fused.size() == 0) lsd_iter_++;
            if (lsd_pos_ % ring == 0) lsd_wrap_block_ = true;
        }
        issue_one(cycle, *fu, iteration, slot);
    }
    elims_last_[0] = elims_this_[0];
    elims_last_[1] = elims_this_[1];
}

}  // namespace uica
