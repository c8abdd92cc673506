#include "uica/frontend.hpp"

#include <algorithm>

#include "uica/errors.hpp"

namespace uica {

int Predecoder::step(std::deque<FetchedInstr>& pending, int iq_free,
                     std::vector<FetchedInstr>& out) {
    if (stall_ > 0) {
        stall_--;
        return 0;
    }
    if (pending.empty() || iq_free <= 0) return 0;
    if (pending.front().fetch_block > cur_block_) cur_block_++;
    if (pending.front().fetch_block != cur_block_) return 0;  // block without instruction ends

    int width = cfg_->predecode_width;
    int avail = std::min(width, iq_free);
    int count = 0, lcp_debt = 0;
    for (size_t k = 0; k < pending.size() && count < avail; k++) {
        if (pending[k].fetch_block != cur_block_) break;
        if (pending[k].lcp && !pending[k].lcp_paid) {
            lcp_debt += cfg_->lcp_penalty;
            pending[k].lcp_paid = true;
        }
        count++;
    }
    if (lcp_debt > 0) {
        // this cycle is the first of the penalty cycles
        stall_ = lcp_debt - 1;
        return 0;
    }
    for (int k = 0; k < count; k++) {
        out.push_back(pending.front());
        pending.pop_front();
    }
    // Full-width cycle followed by an instruction that crosses into the next
    // block with its primary opcode still in this block: one penalty cycle.
    if (count == width && !pending.empty()) {
        const FetchedInstr& next = pending.front();
        if (next.span_blocks > 0 && next.fetch_block - next.span_blocks == cur_block_ &&
            next.opcode_in_start_block)
            stall_ += 1;
    }
    return count;
}

std::vector<DecodeGroupEntry> form_decode_group(const BlockProgram& prog,
                                                const std::deque<FetchedInstr>& iq,
                                                bool upstream_pending) {
    const UarchConfig& cfg = *prog.config;
    std::vector<DecodeGroupEntry> group;
    int uop_budget = cfg.decode_delivery_width;
    size_t pos = 0;
    int decoder = 0;
    int simple_allow = cfg.n_simple_decoders;

    while (pos < iq.size() && decoder <= cfg.n_simple_decoders) {
        const FetchedInstr& fi = iq[pos];
        const InstrProgramInfo& info = prog.instrs[fi.instr];

        bool is_pair = fi.instr + 1 < static_cast<int>(prog.instrs.size()) &&
                       prog.instrs[fi.instr + 1].fused_into_prev;
        if (is_pair) {
            bool partner_here = pos + 1 < iq.size() && iq[pos + 1].instr == fi.instr + 1 &&
                                iq[pos + 1].iteration == fi.iteration;
            if (!partner_here && upstream_pending) break;  // wait for the branch partner
            if (!partner_here) break;
        }
        bool complex_needed = info.requires_complex ||
                              (is_pair && prog.instrs[fi.instr + 1].requires_complex);

        int ms_fused = 0;
        for (int f = info.first_fused; f < info.first_fused + info.n_fused; f++)
            if (prog.fused[f].from_ms) ms_fused++;
        int decoder_uops = info.n_fused - ms_fused;

        if (decoder == 0) {
            simple_allow = std::min(cfg.n_simple_decoders, info.simple_alongside);
            if (decoder_uops > uop_budget && !group.empty()) break;
        } else {
            if (complex_needed) break;
            if (decoder_uops != 1 || ms_fused > 0) break;
            if (decoder > simple_allow) break;
            if (!cfg.fusible_to_last_decoder && info.fusible_first &&
                decoder == cfg.n_simple_decoders)
                break;
            if (decoder_uops > uop_budget) break;
        }

        DecodeGroupEntry e;
        e.iq_items = is_pair ? 2 : 1;
        e.instr = fi.instr;
        e.iteration = fi.iteration;
        e.fused_begin = info.first_fused;
        e.fused_end = info.first_fused + decoder_uops;
        e.starts_ms = ms_fused > 0;
        group.push_back(e);

        uop_budget -= decoder_uops;
        pos += e.iq_items;
        decoder++;
        if (e.starts_ms) break;  // the MS takes over delivery
        if (uop_budget <= 0) break;
    }
    return group;
}

FrontEnd::FrontEnd(const BlockProgram& prog, SimMode mode, FrontEndEvent event)
    : prog_(&prog), cfg_(prog.config), mode_(mode), event_(std::move(event)),
      predecoder_(*prog.config) {
    dsb_prefix_fused_ = 0;
    for (const auto& f : prog.fused)
        if (f.first_instr < prog.dsb_prefix_instrs) dsb_prefix_fused_++;
    gen_segment_first_ = 0;
    gen_instr_ = 0;
    gen_iteration_ = 1;
}

bool FrontEnd::idq_has_space(const std::deque<FusedUopInstance>& idq, int n) const {
    return static_cast<int>(idq.size()) + n <= cfg_->idq_size;
}

void FrontEnd::deliver(std::deque<FusedUopInstance>& idq, long cycle, int fused_index,
                       DeliverySource src) {
    FusedUopInstance u;
    u.fused_index = fused_index;
    u.iteration = deliver_iteration_;
    u.source = src;
    idq.push_back(u);
    delivered_++;
    if (event_) event_('D', cycle, prog_->fused[fused_index].first_instr, deliver_iteration_);
    finish_uop(cycle);
}

void FrontEnd::finish_uop(long cycle) {
    (void)cycle;
    delivered_in_iter_++;
    if (delivered_in_iter_ < prog_->total_fused_uops) return;

    // iteration fully delivered
    iterations_delivered_++;
    delivered_in_iter_ = 0;
    deliver_iteration_++;
    if (prog_->ablations.unbounded_front_end) return;
    bool loop = mode_ == SimMode::loop && prog_->block->ends_with_branch();
    if (!loop) return;  // unroll: the decoders keep going

    if (prog_->lsd_eligible) {
        // the loop body is locked in the IDQ from here on
        lsd_locked_ = true;
        return;
    }
    if (prog_->dsb_prefix_instrs > 0) {
        // a decoders -> DSB switch is possible right after the branch
        source_ = DeliverySource::dsb;
        dsb_pos_ = 0;
    } else {
        source_ = DeliverySource::decoders;
    }
}

void FrontEnd::ensure_fetch_items() {
    const BasicBlock& b = *prog_->block;
    int n = static_cast<int>(b.instructions.size());
    bool loop = mode_ == SimMode::loop && b.ends_with_branch();

    while (static_cast<int>(fetch_pending_.size()) < 3 * cfg_->predecode_width) {
        if (lsd_locked_) return;
        if (gen_instr_ >= n) {
            // plan the next iteration's fetch
            long next_iter = gen_iteration_ + 1;
            if (loop && prog_->lsd_eligible && next_iter >= 2) return;  // LSD: no fetch
            if (loop && next_iter >= 2 && prog_->dsb_prefix_instrs >= n) return;  // all DSB
            gen_iteration_ = next_iter;
            gen_instr_ = (loop && next_iter >= 2) ? prog_->dsb_prefix_instrs : 0;
            gen_segment_first_ = gen_instr_;
            if (loop) gen_virtual_base_ = gen_virtual_max_ + 1;  // fetch redirect
        }
        if (loop && gen_iteration_ >= 2 && gen_segment_first_ > 0 &&
            gen_iteration_ > iterations_delivered_ + 1) {
            // MITE suffix fetch waits for this iteration's DSB prefix
            return;
        }

        long base_bytes = 0;
        if (!loop) base_bytes = static_cast<long>(gen_iteration_ - 1) * b.byte_size();
        long start = base_bytes + b.start_offset(gen_instr_);
        long end = base_bytes + b.end_offset(gen_instr_);
        long seg_fetch_first = (base_bytes + b.start_offset(gen_segment_first_)) / 16;

        FetchedInstr fi;
        fi.instr = gen_instr_;
        fi.iteration = gen_iteration_;
        long start_block = start / 16;
        long end_block = (end - 1) / 16;
        fi.span_blocks = static_cast<int>(end_block - start_block);
        if (loop)
            fi.fetch_block = gen_virtual_base_ + (end_block - seg_fetch_first);
        else
            fi.fetch_block = end_block - (b.start_offset(0) / 16);
        const BlockInstruction& ins = b.instructions[gen_instr_];
        fi.lcp = ins.desc->has_lcp;
        fi.opcode_in_start_block = (start + ins.opcode_offset) / 16 == start_block;
        gen_virtual_max_ = std::max(gen_virtual_max_, fi.fetch_block);
        fetch_pending_.push_back(fi);
        gen_instr_++;
    }
}

void FrontEnd::step(long cycle, std::deque<FusedUopInstance>& idq) {
    if (lsd_locked_) return;

    if (prog_->ablations.unbounded_front_end) {
        // test double: the front end always has uops ready for the renamer
        static_cast<void>(cycle);
        while (idq_has_space(idq, 1)) {
            int idx = delivered_in_iter_;
            deliver(idq, cycle, idx, DeliverySource::decoders);
        }
        return;
    }

    if (stall_cycles_ > 0) {
        stall_cycles_--;
    } else if (ms_active_) {
        int space = cfg_->idq_size - static_cast<int>(idq.size());
        int k = std::min({ms_remaining_, cfg_->ms_delivery_width, space});
        for (int i = 0; i < k; i++) {
            int idx = dsb_pos_;
            dsb_pos_++;
            deliver(idq, cycle, idx, DeliverySource::ms);
        }
        ms_remaining_ -= k;
        if (ms_remaining_ == 0) {
            ms_active_ = false;
            stall_cycles_ = ms_penalty_after_;
        }
    } else if (source_ == DeliverySource::dsb) {
        int budget = cfg_->dsb_bandwidth;
        while (budget > 0 && idq_has_space(idq, 1) && !ms_active_ &&
               source_ == DeliverySource::dsb && dsb_pos_ < dsb_prefix_fused_) {
            if (prog_->fused[dsb_pos_].from_ms) {
                ms_active_ = true;
                ms_remaining_ = 0;
                int instr = prog_->fused[dsb_pos_].first_instr;
                for (int f = dsb_pos_; f < prog_->total_fused_uops && prog_->fused[f].from_ms &&
                                        prog_->fused[f].first_instr == instr;
                     f++)
                    ms_remaining_++;
                ms_penalty_after_ = cfg_->ms_switch_penalty_dsb;
                break;
            }
            int idx = dsb_pos_;
            dsb_pos_++;  // finish_uop resets the stream at an iteration wrap
            deliver(idq, cycle, idx, DeliverySource::dsb);
            budget--;
        }
        if (!ms_active_ && dsb_pos_ >= dsb_prefix_fused_ &&
            source_ == DeliverySource::dsb && delivered_in_iter_ != 0) {
            // prefix exhausted mid-iteration: the rest comes from the decoders
            if (prog_->dsb_prefix_instrs < static_cast<int>(prog_->block->instructions.size()))
                source_ = DeliverySource::decoders;
        }
    } else {
        bool loop = mode_ == SimMode::loop && prog_->block->ends_with_branch();
        auto group = form_decode_group(*prog_, iq_, true);
        for (const auto& e : group) {
            int count = e.fused_end - e.fused_begin;
            if (!idq_has_space(idq, count)) break;
            for (int f = e.fused_begin; f < e.fused_end; f++)
                deliver(idq, cycle, f, DeliverySource::decoders);
            for (int k = 0; k < e.iq_items; k++) iq_.pop_front();
            if (e.starts_ms) {
                ms_active_ = true;
                ms_remaining_ = prog_->instrs[e.instr].ms_uops;
                dsb_pos_ = e.fused_end;  // MS continues from here
                ms_penalty_after_ = cfg_->ms_switch_penalty_decoder;
                break;
            }
            // a taken branch ends the decode group
            if (loop && delivered_in_iter_ == 0) break;
        }
    }

    // fetch side: the predecoder keeps filling the IQ for MITE segments
    ensure_fetch_items();
    std::vector<FetchedInstr> emitted;
    predecoder_.step(fetch_pending_, cfg_->iq_size - static_cast<int>(iq_.size()), emitted);
    for (const auto& e : emitted) {
        if (event_) event_('P', cycle, e.instr, e.iteration);
        iq_.push_back(e);
    }
}

}  // namespace uica
