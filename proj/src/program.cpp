#include "uica/program.hpp"

#include <algorithm>

#include "uica/errors.hpp"

namespace uica {

namespace {

bool is_agu_set(const PortSet& p) {
    // address-generation capable ports across the supported generations
    PortSet agu = PortSet::of({2, 3, 7, 8});
    return (p.bits & ~agu.bits) == 0;
}

bool is_store_data_set(const PortSet& p) {
    PortSet std_ports = PortSet::of({4, 9});
    return (p.bits & ~std_ports.bits) == 0;
}

// Expands a descriptor's uop list into role-tagged scheduler uops wired to
// the concrete operands of `ins`.
std::vector<StaticUop> expand_uops(const BlockInstruction& ins) {
    const InstrDescriptor& d = *ins.desc;
    std::vector<StaticUop> comps;
    for (const auto& spec : d.uop_ports)
        for (int k = 0; k < spec.count; k++) {
            StaticUop u;
            u.ports = spec.ports;
            u.latency = d.latency_default;
            for (const auto& [pair, cyc] : d.latency_pairs) u.latency = std::max(u.latency, cyc);
            comps.push_back(u);
        }

    std::vector<MemOperand> reads, writes;
    for (const auto& m : ins.mem_ops) (m.is_write ? writes : reads).push_back(m);
    if (static_cast<int>(reads.size()) != d.mem_reads ||
        static_cast<int>(writes.size()) != d.mem_writes)
        throw ValidationError("instruction '" + ins.text +
                              "': operand memory accesses do not match the table entry");

    // Role assignment: loads first among AGU-capable uops, then store
    // address uops, then store data uops; the rest are compute uops.
    int need_loads = d.mem_reads, need_sta = d.mem_writes, need_std = d.mem_writes;
    for (auto& u : comps) {
        if (need_loads > 0 && is_agu_set(u.ports)) {
            u.role = UopRole::load;
            u.mem_read_index = d.mem_reads - need_loads;
            need_loads--;
        } else if (need_std > 0 && is_store_data_set(u.ports)) {
            u.role = UopRole::store_data;
            u.mem_write_index = d.mem_writes - need_std;
            need_std--;
        } else if (need_sta > 0 && is_agu_set(u.ports)) {
            u.role = UopRole::store_addr;
            u.mem_write_index = d.mem_writes - need_sta;
            need_sta--;
        }
    }
    if (need_loads || need_sta || need_std)
        throw ValidationError("instruction '" + ins.text +
                              "': cannot map memory accesses onto the uop ports");

    RegSet data_reads = ins.reads;
    data_reads.bits &= ~ins.address_regs.bits;
    bool has_compute = false;
    for (const auto& u : comps) has_compute |= u.role == UopRole::compute;
    int last_compute = -1, last_load = -1;
    for (size_t i = 0; i < comps.size(); i++) {
        if (comps[i].role == UopRole::compute) last_compute = static_cast<int>(i);
        if (comps[i].role == UopRole::load) last_load = static_cast<int>(i);
    }

    for (size_t i = 0; i < comps.size(); i++) {
        StaticUop& u = comps[i];
        switch (u.role) {
            case UopRole::load:
                u.in_regs = reads[u.mem_read_index].regs;
                u.latency = 1;  // replaced by config.load_latency at run time
                break;
            case UopRole::store_addr:
                u.in_regs = writes[u.mem_write_index].regs;
                u.latency = 1;
                break;
            case UopRole::store_data:
                u.in_regs = data_reads;
                u.in_compute_token = has_compute;
                u.in_load_token = !has_compute && d.mem_reads > 0;
                u.latency = 1;
                break;
            case UopRole::compute:
                u.in_regs = data_reads;
                u.in_flags = d.reads_flags;
                u.in_load_token = d.mem_reads > 0;
                break;
        }
    }
    // Register and flag outputs are produced by the last compute uop, or by
    // the last load uop for pure loads.
    int out_at = last_compute >= 0 ? last_compute : last_load;
    if (out_at >= 0) {
        comps[out_at].out_regs = ins.writes;
        comps[out_at].out_flags = d.writes_flags;
    }
    return comps;
}

// Groups scheduler uops of one instruction into fused-domain uops.
std::vector<StaticFusedUop> fuse_uops(const BlockInstruction& ins, int instr_index,
                                      std::vector<StaticUop> comps, bool micro_fusion) {
    const InstrDescriptor& d = *ins.desc;
    int target_fused = micro_fusion ? d.uops_fused_domain : d.uops_unfused;
    int pairs_needed = static_cast<int>(comps.size()) - target_fused;
    if (pairs_needed < 0) pairs_needed = 0;

    std::vector<StaticFusedUop> out;
    std::vector<bool> taken(comps.size(), false);
    auto make = [&](std::initializer_list<int> idxs) {
        StaticFusedUop f;
        f.first_instr = instr_index;
        for (int i : idxs) {
            f.comps.push_back(comps[i]);
            taken[i] = true;
        }
        f.writes = ins.writes;
        out.push_back(std::move(f));
    };

    for (size_t i = 0; i < comps.size(); i++) {
        if (taken[i]) continue;
        if (pairs_needed > 0 && comps[i].role == UopRole::load) {
            // micro-fuse the load with the first free compute uop
            for (size_t j = 0; j < comps.size(); j++) {
                if (!taken[j] && j != i && comps[j].role == UopRole::compute) {
                    make({static_cast<int>(i), static_cast<int>(j)});
                    out.back().unlaminates = d.unlaminates;
                    pairs_needed--;
                    break;
                }
            }
            if (taken[i]) continue;
        }
        if (pairs_needed > 0 && comps[i].role == UopRole::store_addr) {
            for (size_t j = 0; j < comps.size(); j++) {
                if (!taken[j] && j != i && comps[j].role == UopRole::store_data) {
                    make({static_cast<int>(i), static_cast<int>(j)});
                    out.back().unlaminates = d.unlaminates;
                    pairs_needed--;
                    break;
                }
            }
            if (taken[i]) continue;
        }
        make({static_cast<int>(i)});
    }
    if (pairs_needed > 0)
        throw ValidationError("instruction '" + ins.text +
                              "': fused/unfused uop counts do not admit a micro-fusion grouping");

    // The microcode sequencer delivers the trailing uops.
    int ms = std::min(d.uops_ms, static_cast<int>(out.size()));
    for (size_t i = out.size() - ms; i < out.size(); i++) out[i].from_ms = true;

    for (auto& f : out) {
        f.dsb_slots = d.dsb_double_slot ? 2 : 1;
        if (f.from_ms) f.dsb_slots = 0;  // MS uops are not DSB resident
    }
    return out;
}

}  // namespace

bool DsbClassification::region_ok(int index) const {
    for (size_t i = 0; i < region_index.size(); i++)
        if (region_index[i] == index) return region_cacheable[i];
    return true;  // regions without instruction ends impose no restriction
}

namespace {

struct DsbItem {
    int region;       // aligned region index (end-charged)
    int slots;        // DSB line slots needed
    int instr;        // owning instruction
    bool erratum_jump;  // jump crossing or ending on a 32-byte boundary
};

DsbClassification classify_regions(const BasicBlock& block, const UarchConfig& config,
                                   const std::vector<DsbItem>& items) {
    DsbClassification cls;
    cls.block_bytes = config.dsb_block_bytes;
    cls.instr_cacheable.assign(block.instructions.size(), true);

    std::vector<int> regions;
    for (const auto& it : items)
        if (regions.empty() || regions.back() != it.region) regions.push_back(it.region);
    std::sort(regions.begin(), regions.end());
    regions.erase(std::unique(regions.begin(), regions.end()), regions.end());

    std::vector<bool> ok(regions.size(), true);
    for (size_t r = 0; r < regions.size(); r++) {
        int lines = 0, line_used = 0;
        bool any = false;
        for (const auto& it : items) {
            if (it.region != regions[r]) continue;
            if (it.erratum_jump && config.jcc_erratum_workaround) {
                ok[r] = false;
                break;
            }
            if (it.slots == 0) continue;  // MS-delivered uops
            any = true;
            if (lines == 0 || line_used + it.slots > config.dsb_line_slots) {
                lines++;
                line_used = 0;
            }
            line_used += it.slots;
        }
        if (any && lines > config.dsb_max_lines_per_block) ok[r] = false;
    }

    // On SKL/CLX a 32-byte half is served only if both halves of its
    // 64-byte line satisfy the packing restrictions.
    if (config.dsb_both_halves_rule && config.dsb_block_bytes == 32) {
        std::vector<bool> merged = ok;
        for (size_t r = 0; r < regions.size(); r++) {
            int buddy = regions[r] ^ 1;
            for (size_t q = 0; q < regions.size(); q++)
                if (regions[q] == buddy && !ok[q]) merged[r] = false;
        }
        ok = merged;
    }

    cls.region_index = regions;
    cls.region_cacheable.assign(regions.size(), true);
    for (size_t r = 0; r < regions.size(); r++) cls.region_cacheable[r] = ok[r];
    for (const auto& it : items)
        if (!cls.region_ok(it.region)) cls.instr_cacheable[it.instr] = false;
    return cls;
}

std::vector<DsbItem> dsb_items(const BasicBlock& block, const UarchConfig& config,
                               const std::vector<StaticFusedUop>& fused,
                               const std::vector<InstrProgramInfo>& infos) {
    std::vector<DsbItem> items;
    for (size_t f = 0; f < fused.size(); f++) {
        const StaticFusedUop& u = fused[f];
        int last_instr = u.first_instr + u.n_instrs - 1;
        int end = block.end_offset(last_instr);
        DsbItem it;
        it.region = (end - 1) / config.dsb_block_bytes;
        it.slots = u.dsb_slots;
        it.instr = u.first_instr;
        it.erratum_jump = false;
        const InstrDescriptor* d = block.instructions[last_instr].desc;
        if (d->is_branch) {
            // a macro-fused pair counts with the first instruction's start
            int span_start = block.start_offset(u.first_instr);
            int span_end = end;
            bool crosses = (span_start / 32) != ((span_end - 1) / 32);
            bool ends_on = span_end % 32 == 0;
            it.erratum_jump = crosses || ends_on;
        }
        items.push_back(it);
    }
    (void)infos;
    return items;
}

}  // namespace

BlockProgram build_program(const BasicBlock& block, const InstrTable& table,
                           const UarchConfig& config, const Ablations& ablations) {
    if (block.instructions.empty()) throw ValidationError("empty basic block");
    BlockProgram prog;
    prog.block = &block;
    prog.config = &config;
    prog.ablations = ablations;
    size_t n = block.instructions.size();
    prog.instrs.resize(n);

    // macro-fusion pairing
    std::vector<bool> pair_first(n, false);
    if (!ablations.no_macro_fusion) {
        for (size_t i = 0; i + 1 < n; i++) {
            const InstrDescriptor* a = block.instructions[i].desc;
            const InstrDescriptor* b = block.instructions[i + 1].desc;
            if (a->uops_fused_domain == 1 && a->uops_ms == 0 && b->is_fusible_branch &&
                b->uops_ms == 0 && a->macro_fusible_first_with.count(b->branch_class)) {
                pair_first[i] = true;
                i++;  // the branch cannot also start a pair
            }
        }
    }

    for (size_t i = 0; i < n; i++) {
        const BlockInstruction& ins = block.instructions[i];
        const InstrDescriptor& d = *ins.desc;
        InstrProgramInfo& info = prog.instrs[i];
        info.first_fused = static_cast<int>(prog.fused.size());
        info.ms_uops = d.uops_ms;
        info.requires_complex = d.requires_complex_decoder || d.uops_fused_domain > 1 ||
                                d.uops_ms > 0;
        info.simple_alongside =
            d.simple_alongside >= 0 ? d.simple_alongside : config.n_simple_decoders;
        info.fusible_first = !ablations.no_macro_fusion && !d.macro_fusible_first_with.empty();
        prog.fused_of_instr.push_back(info.first_fused);

        if (i > 0 && pair_first[i - 1]) {
            info.fused_into_prev = true;
            info.n_fused = 0;
            continue;
        }

        if (d.is_nop) {
            StaticFusedUop f;
            f.first_instr = static_cast<int>(i);
            f.kind = StaticFusedUop::Kind::nop;
            prog.fused.push_back(f);
            info.n_fused = 1;
            continue;
        }
        if (ins.zero_idiom_instance) {
            StaticFusedUop f;
            f.first_instr = static_cast<int>(i);
            f.kind = StaticFusedUop::Kind::zero_idiom;
            f.writes = ins.writes;
            prog.fused.push_back(f);
            info.n_fused = 1;
            continue;
        }

        auto comps = expand_uops(ins);
        auto fused = fuse_uops(ins, static_cast<int>(i), std::move(comps),
                               !ablations.no_micro_fusion);

        if (pair_first[i]) {
            // merge the flag-writing uop with the following branch
            const BlockInstruction& br = block.instructions[i + 1];
            auto br_comps = expand_uops(br);
            if (fused.size() != 1 || fused[0].comps.empty() || br_comps.size() != 1)
                throw ValidationError("macro fusion requires single-uop pair members: " +
                                      ins.text);
            StaticFusedUop& f = fused[0];
            StaticUop& u = f.comps.back();
            const StaticUop& bu = br_comps[0];
            u.ports = bu.ports;
            RegSet br_in = bu.in_regs;
            br_in.bits &= ~ins.writes.bits;
            u.in_regs.merge(br_in);
            if (bu.in_flags && !ins.desc->writes_flags) u.in_flags = true;
            u.out_regs.merge(bu.out_regs);
            u.out_flags = u.out_flags || bu.out_flags;
            f.n_instrs = 2;
            f.writes.merge(br.writes);
        }

        if (d.move_elim_class != MoveElimClass::none && ins.move_src_valid &&
            fused.size() == 1) {
            fused[0].kind = StaticFusedUop::Kind::move;
            fused[0].move_class = d.move_elim_class;
            fused[0].move_src = ins.move_src;
            fused[0].move_dst = ins.move_dst;
        }

        info.n_fused = static_cast<int>(fused.size());
        for (auto& f : fused) prog.fused.push_back(std::move(f));
    }

    prog.total_fused_uops = static_cast<int>(prog.fused.size());

    // DSB eligibility over the loop layout (end-charged regions).
    auto items = dsb_items(block, config, prog.fused, prog.instrs);
    auto cls = classify_regions(block, config, items);
    for (size_t i = 0; i < n; i++) prog.instrs[i].dsb_ok = cls.instr_cacheable[i];
    prog.dsb_prefix_instrs = 0;
    for (size_t i = 0; i < n; i++) {
        if (!prog.instrs[i].dsb_ok) break;
        prog.dsb_prefix_instrs++;
    }

    // LSD: the whole loop's fused uops must fit in the IDQ; microcoded
    // instructions are not LSD candidates.
    bool has_ms = false;
    for (const auto& f : prog.fused) has_ms |= f.from_ms;
    prog.lsd_eligible = config.lsd_enabled && !has_ms && block.ends_with_branch() &&
                        prog.total_fused_uops <= config.idq_size;
    prog.lsd_unroll = 1;
    if (prog.lsd_eligible && !ablations.no_lsd_unroll)
        prog.lsd_unroll = config.lsd_unroll_factor(prog.total_fused_uops);
    while (prog.lsd_unroll > 1 && prog.lsd_unroll * prog.total_fused_uops > config.idq_size)
        prog.lsd_unroll--;
    return prog;
}

DsbClassification dsb_classify(const BasicBlock& block, const InstrTable& table,
                               const UarchConfig& config) {
    BlockProgram prog = build_program(block, table, config, {});
    auto items = dsb_items(block, config, prog.fused, prog.instrs);
    return classify_regions(block, config, items);
}

}  // namespace uica
