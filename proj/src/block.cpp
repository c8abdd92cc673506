#include "uica/block.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "uica/errors.hpp"
#include "uica/record_file.hpp"

namespace uica {

bool BasicBlock::ends_with_branch() const {
    return !instructions.empty() && instructions.back().desc &&
           instructions.back().desc->is_branch;
}

int BasicBlock::byte_size() const {
    int n = 0;
    for (const auto& ins : instructions) n += ins.byte_length;
    return n;
}

int BasicBlock::start_offset(size_t i) const {
    int off = alignment_offset;
    for (size_t k = 0; k < i; k++) off += instructions[k].byte_length;
    return off;
}

int BasicBlock::end_offset(size_t i) const { return start_offset(i) + instructions[i].byte_length; }

RegSet BasicBlock::regs_used() const {
    RegSet s;
    for (const auto& ins : instructions) {
        s.merge(ins.reads);
        s.merge(ins.writes);
        s.merge(ins.address_regs);
    }
    return s;
}

RegSet BasicBlock::regs_written() const {
    RegSet s;
    for (const auto& ins : instructions) s.merge(ins.writes);
    return s;
}

namespace {

struct Operand {
    enum class Kind { reg, imm, mem, label } kind;
    RegName reg{};
    int64_t imm = 0;
    MemOperand mem;
    int mem_width = 0;
};

bool parse_int(const std::string& s, int64_t& out) {
    if (s.empty()) return false;
    try {
        size_t pos = 0;
        out = std::stoll(s, &pos, 0);  // handles 0x..., decimal, sign
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

Operand parse_mem_operand(const std::string& inner, const std::string& line) {
    Operand op;
    op.kind = Operand::Kind::mem;
    // base [+ index[*scale]] [+/- disp], in any order
    std::vector<std::string> terms;
    std::string cur;
    std::vector<int> signs;
    int sign = 1;
    for (char c : inner) {
        if (c == '+' || c == '-') {
            if (!trim(cur).empty()) {
                terms.push_back(trim(cur));
                signs.push_back(sign);
            }
            cur.clear();
            sign = (c == '-') ? -1 : 1;
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) {
        terms.push_back(trim(cur));
        signs.push_back(sign);
    }
    int reg_terms = 0;
    for (size_t i = 0; i < terms.size(); i++) {
        const std::string& t = terms[i];
        auto star = t.find('*');
        std::string regpart = star == std::string::npos ? t : trim(t.substr(0, star));
        if (auto r = parse_register(regpart)) {
            op.mem.regs.add(r->reg);
            reg_terms++;
            if (star != std::string::npos || reg_terms > 1) op.mem.indexed = true;
            continue;
        }
        int64_t v;
        if (parse_int(t, v)) {
            op.mem.displacement += signs[i] * v;
            continue;
        }
        throw ParseError("bad memory operand term '" + t + "' in: " + line);
    }
    return op;
}

Operand parse_operand(const std::string& raw, const std::string& line) {
    std::string t = trim(raw);
    if (t.empty()) throw ParseError("empty operand in: " + line);
    if (t.front() == '[') {
        if (t.back() != ']') throw ParseError("unterminated memory operand in: " + line);
        return parse_mem_operand(t.substr(1, t.size() - 2), line);
    }
    if (auto r = parse_register(t)) {
        Operand op;
        op.kind = Operand::Kind::reg;
        op.reg = *r;
        return op;
    }
    int64_t v;
    if (parse_int(t, v)) {
        Operand op;
        op.kind = Operand::Kind::imm;
        op.imm = v;
        return op;
    }
    Operand op;
    op.kind = Operand::Kind::label;
    return op;
}

std::string shape_of(const Operand& op, int imm_hint, int mem_hint) {
    switch (op.kind) {
        case Operand::Kind::reg:
            if (op.reg.reg.cls == RegClass::vec) return "X";
            return "R" + std::to_string(op.reg.width);
        case Operand::Kind::imm: {
            if (op.imm >= -128 && op.imm <= 127) return "I8";
            if (op.imm > 0x7fffffffLL || op.imm < -0x80000000LL) return "I64";
            int w = imm_hint ? std::min(imm_hint, 32) : 32;
            return "I" + std::to_string(w);
        }
        case Operand::Kind::mem: {
            std::string s = "M" + std::to_string(mem_hint ? mem_hint : 64);
            if (op.mem.indexed) s += "X";
            return s;
        }
        case Operand::Kind::label:
            return "";
    }
    return "";
}

// One listing line -> BlockInstruction. Annotations after '|' provide the
// byte length and optionally the opcode offset.
BlockInstruction parse_line(const std::string& raw_line, const InstrTable& table) {
    std::string line = trim(raw_line);
    int len = -1, op_off = -1;
    auto bar = line.find('|');
    if (bar != std::string::npos) {
        std::string annos = line.substr(bar);
        line = trim(line.substr(0, bar));
        for (const auto& a : split(annos, '|')) {
            std::string t = trim(a);
            if (t.empty()) continue;
            if (t.rfind("len=", 0) == 0)
                len = std::stoi(t.substr(4));
            else if (t.rfind("op=", 0) == 0)
                op_off = std::stoi(t.substr(3));
            else
                throw ParseError("unknown annotation '" + t + "' in: " + raw_line);
        }
    }
    // strip a leading "label:" if present
    auto colon = line.find(':');
    if (colon != std::string::npos && line.find_first_of(" \t[,") > colon)
        line = trim(line.substr(colon + 1));
    if (line.empty()) throw ParseError("empty instruction line");

    auto sp = line.find_first_of(" \t");
    std::string mnemonic = line.substr(0, sp);
    for (auto& c : mnemonic) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::vector<Operand> operands;
    if (sp != std::string::npos) {
        for (const auto& part : split(line.substr(sp + 1), ',')) {
            std::string t = trim(part);
            if (t.empty()) throw ParseError("empty operand in: " + raw_line);
            operands.push_back(parse_operand(t, raw_line));
        }
    }

    // operand widths: immediates follow the widest GPR operand; memory
    // follows the register operand (vector registers make it M128)
    int gpr_hint = 0;
    bool has_vec = false;
    for (const auto& op : operands) {
        if (op.kind != Operand::Kind::reg) continue;
        if (op.reg.reg.cls == RegClass::gpr)
            gpr_hint = std::max(gpr_hint, op.reg.width);
        else
            has_vec = true;
    }
    int mem_hint = gpr_hint ? gpr_hint : (has_vec ? 128 : 64);

    std::string key = mnemonic;
    for (const auto& op : operands) {
        std::string s = shape_of(op, gpr_hint, mem_hint);
        if (!s.empty()) key += " " + s;
    }

    BlockInstruction ins;
    ins.key = key;
    ins.text = trim(raw_line.substr(0, bar == std::string::npos ? raw_line.size() : bar));
    const InstrDescriptor* d = table.find(key);
    if (!d) throw UnknownInstructionError(key + " (from '" + trim(raw_line) + "')");
    ins.desc = d;

    ins.byte_length = len >= 0 ? len : d->default_len;
    if (ins.byte_length < 1 || ins.byte_length > 15)
        throw ParseError("instruction '" + ins.text +
                         "': byte length must be in 1..15 (use |len=N or a table default)");
    ins.opcode_offset = op_off >= 0 ? op_off : d->default_opcode_offset;
    if (ins.opcode_offset < 0 || ins.opcode_offset >= ins.byte_length)
        throw ParseError("instruction '" + ins.text + "': opcode offset outside the encoding");

    // Operand access modes come from the descriptor; signature arity must match.
    size_t n_sig = 0;
    for (const auto& op : operands)
        if (op.kind != Operand::Kind::label) n_sig++;
    if (!d->operand_modes.empty() && d->operand_modes.size() != n_sig)
        throw ParseError("instruction '" + ins.text + "': descriptor expects " +
                         std::to_string(d->operand_modes.size()) + " operands");
    size_t sig_idx = 0;
    for (const auto& op : operands) {
        if (op.kind == Operand::Kind::label) continue;
        std::string mode = sig_idx < d->operand_modes.size() ? d->operand_modes[sig_idx] : "r";
        bool rd = mode.find('r') != std::string::npos;
        bool wr = mode.find('w') != std::string::npos;
        if (op.kind == Operand::Kind::reg) {
            if (rd) ins.reads.add(op.reg.reg);
            if (wr) ins.writes.add(op.reg.reg);
        } else if (op.kind == Operand::Kind::mem) {
            MemOperand m = op.mem;
            m.is_write = wr;
            ins.address_regs.merge(m.regs);
            ins.reads.merge(m.regs);  // address registers are inputs
            if (rd && wr) {
                MemOperand r2 = m;
                r2.is_write = false;
                ins.mem_ops.push_back(r2);
                ins.mem_ops.push_back(m);
            } else {
                ins.mem_ops.push_back(m);
            }
        }
        sig_idx++;
    }

    // address-computation operands (LEA) reference registers without
    // touching memory
    if (d->mem_reads == 0 && d->mem_writes == 0) {
        ins.mem_ops.clear();
        ins.address_regs = RegSet{};
    }

    if (d->is_zero_idiom && operands.size() == 2 && operands[0].kind == Operand::Kind::reg &&
        operands[1].kind == Operand::Kind::reg &&
        operands[0].reg.reg == operands[1].reg.reg) {
        ins.zero_idiom_instance = true;
        // result is input-independent
        ins.reads = RegSet{};
    }
    if (d->move_elim_class != MoveElimClass::none && operands.size() == 2 &&
        operands[0].kind == Operand::Kind::reg && operands[1].kind == Operand::Kind::reg) {
        ins.move_src_valid = true;
        ins.move_dst = operands[0].reg.reg;
        ins.move_src = operands[1].reg.reg;
    }
    return ins;
}

}  // namespace

BasicBlock parse_block(const std::string& text, const InstrTable& table, int alignment_offset) {
    if (alignment_offset < 0 || alignment_offset > 63)
        throw ParseError("alignment offset must be in 0..63");
    BasicBlock block;
    block.alignment_offset = alignment_offset;
    std::string normalized = text;
    std::replace(normalized.begin(), normalized.end(), '\n', ';');
    for (const auto& part : split(normalized, ';')) {
        if (trim(part).empty()) continue;
        block.instructions.push_back(parse_line(part, table));
    }
    if (block.instructions.empty()) throw ParseError("empty basic block");
    for (size_t i = 0; i + 1 < block.instructions.size(); i++)
        if (block.instructions[i].desc->is_branch)
            throw ParseError("branch before the end of the block: " +
                             block.instructions[i].text);
    return block;
}

std::optional<BasicBlock> make_loop_variant(const BasicBlock& block, const InstrTable& table,
                                            Reg* chosen) {
    if (block.ends_with_branch())
        throw ValidationError("loop variant requires a block without a trailing branch");
    RegSet used = block.regs_used();
    int free = -1;
    for (int i = kNumGpr - 1; i >= 0; i--) {
        if (!used.contains({RegClass::gpr, i})) {
            free = i;
            break;
        }
    }
    if (free < 0) return std::nullopt;
    if (chosen) *chosen = {RegClass::gpr, free};

    BasicBlock out;
    out.alignment_offset = block.alignment_offset;
    size_t body = block.instructions.size();
    size_t copies = body >= 5 ? 1 : (5 + body - 1) / body;
    for (size_t c = 0; c < copies; c++)
        for (const auto& ins : block.instructions) out.instructions.push_back(ins);

    out.instructions.push_back(parse_line("DEC " + gpr_name(free), table));
    out.instructions.push_back(parse_line("JNZ loop", table));
    return out;
}

std::string reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "none";
        case RejectReason::divider: return "divider";
        case RejectReason::cpuid: return "cpuid";
        case RejectReason::ambiguous_mem_alias: return "ambiguous_mem_alias";
        case RejectReason::x87_unbalanced: return "x87_unbalanced";
        case RejectReason::x87_pop_first: return "x87_pop_first";
        case RejectReason::unsupported_insn: return "unsupported_insn";
        case RejectReason::icl_store_pair_ambiguous: return "icl_store_pair_ambiguous";
    }
    return "?";
}

namespace {

int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) q--;
    return q;
}

}  // namespace

FilterResult filter_benchmark(const BasicBlock& block, const InstrTable& table,
                              const UarchConfig& config) {
    (void)table;  // descriptors already resolved on the block
    int ordinal = config.ordinal();
    for (const auto& ins : block.instructions)
        if (ins.desc->min_supported_uarch > ordinal)
            return {false, RejectReason::unsupported_insn};
    for (const auto& ins : block.instructions) {
        if (ins.desc->divider_unit) return {false, RejectReason::divider};
        if (ins.desc->is_cpuid) return {false, RejectReason::cpuid};
    }

    // x87 stack balance: net push/pop count, and no pop before the first push.
    int depth = 0, min_depth = 0;
    bool any_x87 = false;
    for (const auto& ins : block.instructions) {
        if (ins.desc->is_x87_push) {
            any_x87 = true;
            depth++;
        }
        if (ins.desc->is_x87_pop) {
            any_x87 = true;
            depth--;
            min_depth = std::min(min_depth, depth);
        }
    }
    if (any_x87) {
        if (depth != 0) return {false, RejectReason::x87_unbalanced};
        if (min_depth < 0) return {false, RejectReason::x87_pop_first};
    }

    // Blocks both reading and writing memory must have a statically obvious
    // aliasing relation: identical, unmodified address registers.
    RegSet written = block.regs_written();
    std::vector<const MemOperand*> mem_reads, mem_writes;
    for (const auto& ins : block.instructions)
        for (const auto& m : ins.mem_ops)
            (m.is_write ? mem_writes : mem_reads).push_back(&m);
    if (!mem_reads.empty() && !mem_writes.empty()) {
        for (const auto* r : mem_reads)
            for (const auto* w : mem_writes)
                if (!(r->regs == w->regs))
                    return {false, RejectReason::ambiguous_mem_alias};
        for (const auto* m : mem_reads)
            if (m->regs.intersects(written)) return {false, RejectReason::ambiguous_mem_alias};
        for (const auto* m : mem_writes)
            if (m->regs.intersects(written)) return {false, RejectReason::ambiguous_mem_alias};
    }

    // Configs that can retire two stores per cycle do so only for stores to
    // the same cache line; reject store pairs we cannot prove equal-line.
    if (config.stores_per_cycle >= 2 && mem_writes.size() >= 2) {
        for (size_t i = 0; i < mem_writes.size(); i++) {
            for (size_t j = i + 1; j < mem_writes.size(); j++) {
                const MemOperand* a = mem_writes[i];
                const MemOperand* b = mem_writes[j];
                bool provable = a->regs == b->regs && !a->regs.intersects(written) &&
                                floor_div(a->displacement, 64) == floor_div(b->displacement, 64);
                if (!provable) return {false, RejectReason::icl_store_pair_ambiguous};
            }
        }
    }
    return {true, RejectReason::none};
}

SuiteLoadResult load_suite(const std::string& path, const InstrTable& table) {
    auto records = parse_records_file(path);
    SuiteLoadResult out;
    int auto_id = 0;
    for (const Record& r : records) {
        if (r.has("suite") && !r.has("block")) {
            out.suite_id = r.get("suite");
            continue;
        }
        try {
            BenchmarkRecord b;
            b.suite_id = out.suite_id;
            b.id = r.get_or("id", "b" + std::to_string(auto_id));
            b.block = parse_block(r.get("block"), table, r.get_int_or("align", 0));
            if (r.has("tp")) {
                double tp = r.get_double("tp");
                if (tp <= 0) {
                    out.skipped++;
                    out.warnings.push_back(b.id + ": non-positive measured throughput, skipped");
                    continue;
                }
                b.measured_tp = tp;
            }
            out.records.push_back(std::move(b));
        } catch (const UnknownInstructionError& e) {
            out.skipped++;
            out.warnings.push_back(path + ":" + std::to_string(r.first_line) +
                                   ": unsupported: " + e.what());
        } catch (const ParseError& e) {
            out.skipped++;
            out.warnings.push_back(std::string(e.what()) + " (record skipped)");
        }
        auto_id++;
    }
    return out;
}

std::string serialize_suite(const std::vector<BenchmarkRecord>& records,
                            const std::string& suite_id) {
    std::ostringstream os;
    if (!suite_id.empty()) os << "suite: " << suite_id << "\n";
    for (const auto& b : records) {
        os << "\n";
        os << "id: " << b.id << "\n";
        std::string listing;
        for (const auto& ins : b.block.instructions) {
            if (!listing.empty()) listing += "; ";
            listing += ins.text + " |len=" + std::to_string(ins.byte_length);
            if (ins.opcode_offset) listing += " |op=" + std::to_string(ins.opcode_offset);
        }
        os << "block: " << listing << "\n";
        if (b.block.alignment_offset) os << "align: " << b.block.alignment_offset << "\n";
        if (b.measured_tp) {
            char buf[32];
            snprintf(buf, sizeof buf, "%.6g", *b.measured_tp);
            os << "tp: " << buf << "\n";
        }
    }
    return os.str();
}

}  // namespace uica
