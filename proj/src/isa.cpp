#include "uica/isa.hpp"

#include <fstream>
#include <sstream>

#include "uica/errors.hpp"
#include "uica/record_file.hpp"
#include "uica/uarch.hpp"

namespace uica {

PortSet PortSet::parse(const std::string& digits) {
    PortSet p;
    for (char c : digits) {
        if (c < '0' || c > '9') throw ParseError("bad port set '" + digits + "'");
        p.add(c - '0');
    }
    return p;
}

int PortSet::count() const {
    int n = 0;
    for (int i = 0; i < 16; i++)
        if (bits & (1u << i)) n++;
    return n;
}

int PortSet::single() const { return count() == 1 ? highest() : -1; }

int PortSet::highest() const {
    for (int i = 15; i >= 0; i--)
        if (bits & (1u << i)) return i;
    return -1;
}

std::string PortSet::str() const {
    std::string s;
    for (int i = 0; i < 16; i++)
        if (bits & (1u << i)) s += static_cast<char>('0' + i);
    return s;
}

std::vector<int> PortSet::ports() const {
    std::vector<int> out;
    for (int i = 0; i < 16; i++)
        if (bits & (1u << i)) out.push_back(i);
    return out;
}

int InstrDescriptor::latency_for(int in_op, int out_op) const {
    auto it = latency_pairs.find({in_op, out_op});
    return it != latency_pairs.end() ? it->second : latency_default;
}

const InstrDescriptor* InstrTable::find(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
}

const InstrDescriptor& InstrTable::lookup(const std::string& key) const {
    const InstrDescriptor* d = find(key);
    if (!d) throw UnknownInstructionError(key);
    return *d;
}

bool InstrTable::operator==(const InstrTable& o) const {
    if (uarch_name != o.uarch_name || table_version != o.table_version) return false;
    if (entries.size() != o.entries.size()) return false;
    // Descriptors compare through their serialized form; the table format
    // is the canonical representation.
    return serialize_instr_table(*this) == serialize_instr_table(o);
}

void validate_descriptor(const InstrDescriptor& d) {
    auto fail = [&](const std::string& msg) {
        throw ValidationError("instruction '" + d.key + "': " + msg);
    };
    bool renamer_only = d.is_nop || d.is_zero_idiom || d.move_elim_class != MoveElimClass::none;
    if (d.uops_fused_domain < 1) fail("uops_fused_domain must be >= 1");
    if (d.uops_unfused < d.uops_fused_domain && !renamer_only)
        fail("uops_unfused must be >= uops_fused_domain");
    if (d.uops_unfused == 0 && !renamer_only)
        fail("only NOPs, zero idioms and eliminable moves may have 0 unfused uops");
    int port_sum = 0;
    for (const auto& u : d.uop_ports) {
        if (u.count < 1) fail("uop multiplicity must be >= 1");
        if (u.ports.empty()) fail("empty port set");
        port_sum += u.count;
    }
    if (port_sum != d.uops_unfused)
        fail("port multiplicities sum to " + std::to_string(port_sum) + " but uops_unfused is " +
             std::to_string(d.uops_unfused));
    if (d.uops_ms > d.uops_fused_domain) fail("uops_ms exceeds uops_fused_domain");
    if (d.uops_ms > 0 && !d.requires_complex_decoder)
        fail("microcoded instructions require the complex decoder");
    if (d.is_fusible_branch && !d.is_cond_branch)
        fail("only conditional branches can be the second element of a macro-fused pair");
    if (d.is_fusible_branch && d.branch_class.empty())
        fail("fusible branches need a branch_class");
    if (d.uops_unfused > 0 && d.uop_ports.empty()) fail("missing ports");
    if (d.mem_reads < 0 || d.mem_writes < 0) fail("negative memory access count");
    if (d.default_len < 0 || d.default_len > 15) fail("default_len out of range (1..15)");
    if (d.default_opcode_offset < 0 ||
        (d.default_len > 0 && d.default_opcode_offset >= d.default_len))
        fail("default opcode offset must lie within the encoding");
}

namespace {

std::vector<UopSpec> parse_ports(const std::string& s, const Record& r) {
    // "1*0156 1*23" -> one uop on {0,1,5,6}, one on {2,3}
    std::vector<UopSpec> out;
    for (const auto& tok : split(s, ' ')) {
        std::string t = trim(tok);
        if (t.empty()) continue;
        auto star = t.find('*');
        UopSpec u;
        try {
            if (star == std::string::npos) {
                u.count = 1;
                u.ports = PortSet::parse(t);
            } else {
                u.count = std::stoi(t.substr(0, star));
                u.ports = PortSet::parse(t.substr(star + 1));
            }
        } catch (const std::exception&) {
            r.fail("bad ports entry '" + t + "'");
        }
        out.push_back(u);
    }
    return out;
}

void parse_latency(const std::string& s, InstrDescriptor& d, const Record& r) {
    // scalar, or "scalar; in>out:cycles in>out:cycles"
    auto semi = s.find(';');
    std::string scalar = trim(semi == std::string::npos ? s : s.substr(0, semi));
    try {
        d.latency_default = std::stoi(scalar);
    } catch (const std::exception&) {
        r.fail("bad latency '" + s + "'");
    }
    if (semi == std::string::npos) return;
    for (const auto& tok : split(s.substr(semi + 1), ' ')) {
        std::string t = trim(tok);
        if (t.empty()) continue;
        auto gt = t.find('>');
        auto colon = t.find(':', gt == std::string::npos ? 0 : gt);
        if (gt == std::string::npos || colon == std::string::npos)
            r.fail("latency pair entries must be 'in>out:cycles', got '" + t + "'");
        try {
            int in = std::stoi(t.substr(0, gt));
            int out = std::stoi(t.substr(gt + 1, colon - gt - 1));
            int cyc = std::stoi(t.substr(colon + 1));
            d.latency_pairs[{in, out}] = cyc;
        } catch (const std::exception&) {
            r.fail("bad latency pair '" + t + "'");
        }
    }
}

MoveElimClass parse_move_elim(const std::string& s, const Record& r) {
    if (s == "none") return MoveElimClass::none;
    if (s == "gpr") return MoveElimClass::gpr;
    if (s == "vec") return MoveElimClass::vec;
    r.fail("bad move_elim class '" + s + "'");
}

}  // namespace

InstrTable parse_instr_table(std::istream& in, const std::string& source) {
    auto records = parse_records(in, source);
    InstrTable table;
    bool have_header = false;
    for (const Record& r : records) {
        if (!have_header) {
            table.uarch_name = r.get("uarch");
            table.table_version = r.get_or("table_version", "1");
            have_header = true;
            if (r.has("key")) r.fail("the first record is the table header; no 'key' allowed");
            continue;
        }
        InstrDescriptor d;
        d.key = r.get("key");
        d.uops_fused_domain = r.get_int_or("uops", 1);
        d.uops_unfused = r.get_int_or("uops_unfused", d.uops_fused_domain);
        d.uops_ms = r.get_int_or("uops_ms", 0);
        if (r.has("ports")) d.uop_ports = parse_ports(r.get("ports"), r);
        if (r.has("latency")) parse_latency(r.get("latency"), d, r);
        d.requires_complex_decoder = r.get_bool_or("complex_decoder", false);
        d.simple_alongside = r.get_int_or("simple_alongside", -1);
        for (const auto& cls : split(r.get_or("fuse_with", ""), ' '))
            if (!trim(cls).empty()) d.macro_fusible_first_with.insert(trim(cls));
        d.branch_class = r.get_or("branch_class", "");
        d.is_fusible_branch = r.get_bool_or("fusible_branch", false);
        d.has_lcp = r.get_bool_or("lcp", false);
        d.is_zero_idiom = r.get_bool_or("zero_idiom", false);
        d.is_nop = r.get_bool_or("nop", false);
        d.move_elim_class = parse_move_elim(r.get_or("move_elim", "none"), r);
        d.unlaminates = r.get_bool_or("unlaminates", false);
        d.dsb_double_slot = r.get_bool_or("dsb_double_slot", false);
        d.is_branch = r.get_bool_or("branch", false);
        d.is_cond_branch = r.get_bool_or("cond_branch", false);
        d.mem_reads = r.get_int_or("mem_reads", 0);
        d.mem_writes = r.get_int_or("mem_writes", 0);
        d.divider_unit = r.get_bool_or("divider", false);
        d.is_cpuid = r.get_bool_or("cpuid", false);
        d.is_x87_push = r.get_bool_or("x87_push", false);
        d.is_x87_pop = r.get_bool_or("x87_pop", false);
        d.is_tzcnt = r.get_bool_or("tzcnt", false);
        d.min_supported_uarch = uarch_ordinal(r.get_or("min_uarch", "SNB"));
        for (const auto& m : split(r.get_or("operands", ""), ' '))
            if (!trim(m).empty()) d.operand_modes.push_back(trim(m));
        std::string flags = r.get_or("flags", "-");
        d.reads_flags = flags == "r" || flags == "rw";
        d.writes_flags = flags == "w" || flags == "rw";
        if (flags != "-" && flags != "r" && flags != "w" && flags != "rw")
            r.fail("bad flags mode '" + flags + "'");
        d.default_len = r.get_int_or("len", 0);
        d.default_opcode_offset = r.get_int_or("opcode_offset", 0);
        validate_descriptor(d);
        if (table.entries.count(d.key)) r.fail("duplicate key '" + d.key + "'");
        table.entries[d.key] = std::move(d);
    }
    if (!have_header) throw ParseError(source + ": empty table (missing header record)");
    return table;
}

InstrTable load_instr_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instruction table: " + path);
    return parse_instr_table(in, path);
}

namespace {

void emit(std::ostream& os, const std::string& name, const std::string& value) {
    os << name << ": " << value << "\n";
}

}  // namespace

std::string serialize_instr_table(const InstrTable& table) {
    std::ostringstream os;
    emit(os, "uarch", table.uarch_name);
    emit(os, "table_version", table.table_version);
    for (const auto& [key, d] : table.entries) {
        os << "\n";
        emit(os, "key", d.key);
        if (d.default_len) emit(os, "len", std::to_string(d.default_len));
        if (d.default_opcode_offset)
            emit(os, "opcode_offset", std::to_string(d.default_opcode_offset));
        emit(os, "uops", std::to_string(d.uops_fused_domain));
        if (d.uops_unfused != d.uops_fused_domain)
            emit(os, "uops_unfused", std::to_string(d.uops_unfused));
        if (d.uops_ms) emit(os, "uops_ms", std::to_string(d.uops_ms));
        if (!d.uop_ports.empty()) {
            std::string s;
            for (const auto& u : d.uop_ports) {
                if (!s.empty()) s += ' ';
                s += std::to_string(u.count) + "*" + u.ports.str();
            }
            emit(os, "ports", s);
        }
        {
            std::string lat = std::to_string(d.latency_default);
            if (!d.latency_pairs.empty()) {
                lat += ";";
                for (const auto& [k, v] : d.latency_pairs)
                    lat += " " + std::to_string(k.first) + ">" + std::to_string(k.second) + ":" +
                           std::to_string(v);
            }
            emit(os, "latency", lat);
        }
        if (d.requires_complex_decoder) emit(os, "complex_decoder", "true");
        if (d.simple_alongside >= 0)
            emit(os, "simple_alongside", std::to_string(d.simple_alongside));
        if (!d.macro_fusible_first_with.empty()) {
            std::string s;
            for (const auto& c : d.macro_fusible_first_with) {
                if (!s.empty()) s += ' ';
                s += c;
            }
            emit(os, "fuse_with", s);
        }
        if (!d.branch_class.empty()) emit(os, "branch_class", d.branch_class);
        if (d.is_fusible_branch) emit(os, "fusible_branch", "true");
        if (d.has_lcp) emit(os, "lcp", "true");
        if (d.is_zero_idiom) emit(os, "zero_idiom", "true");
        if (d.is_nop) emit(os, "nop", "true");
        if (d.move_elim_class != MoveElimClass::none)
            emit(os, "move_elim", d.move_elim_class == MoveElimClass::gpr ? "gpr" : "vec");
        if (d.unlaminates) emit(os, "unlaminates", "true");
        if (d.dsb_double_slot) emit(os, "dsb_double_slot", "true");
        if (d.is_branch) emit(os, "branch", "true");
        if (d.is_cond_branch) emit(os, "cond_branch", "true");
        if (d.mem_reads) emit(os, "mem_reads", std::to_string(d.mem_reads));
        if (d.mem_writes) emit(os, "mem_writes", std::to_string(d.mem_writes));
        if (d.divider_unit) emit(os, "divider", "true");
        if (d.is_cpuid) emit(os, "cpuid", "true");
        if (d.is_x87_push) emit(os, "x87_push", "true");
        if (d.is_x87_pop) emit(os, "x87_pop", "true");
        if (d.is_tzcnt) emit(os, "tzcnt", "true");
        if (d.min_supported_uarch) emit(os, "min_uarch", uarch_gen_name(d.min_supported_uarch));
        if (!d.operand_modes.empty()) {
            std::string s;
            for (const auto& m : d.operand_modes) {
                if (!s.empty()) s += ' ';
                s += m;
            }
            emit(os, "operands", s);
        }
        if (d.reads_flags || d.writes_flags) {
            std::string f = d.reads_flags && d.writes_flags ? "rw" : (d.reads_flags ? "r" : "w");
            emit(os, "flags", f);
        }
    }
    return os.str();
}

}  // namespace uica
