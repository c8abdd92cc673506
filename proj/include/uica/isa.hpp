#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace uica {

// Execution ports as a bitmask; written as digit strings ("0156") in the
// table files.
struct PortSet {
    uint16_t bits = 0;

    static PortSet parse(const std::string& digits);  // throws ParseError
    static PortSet of(std::initializer_list<int> ports) {
        PortSet p;
        for (int x : ports) p.add(x);
        return p;
    }
    void add(int port) { bits |= static_cast<uint16_t>(1u << port); }
    bool contains(int port) const { return bits & (1u << port); }
    int count() const;
    bool empty() const { return bits == 0; }
    int single() const;  // the only port; -1 if not a singleton
    int highest() const;
    std::string str() const;
    std::vector<int> ports() const;
    bool operator==(const PortSet& o) const { return bits == o.bits; }
};

enum class MoveElimClass { none, gpr, vec };

// One uop of an instruction: multiplicity and the ports it may use.
struct UopSpec {
    int count = 1;
    PortSet ports;
};

// Static metadata for one instruction variant (mnemonic + canonical
// operand signature). Everything decoding, fusion, port usage and latency
// need to know about the instruction is in here.
struct InstrDescriptor {
    std::string key;
    int uops_fused_domain = 1;  // uops delivered into the IDQ
    int uops_unfused = 1;       // uops entering the scheduler
    int uops_ms = 0;            // uops delivered by the microcode sequencer
    std::vector<UopSpec> uop_ports;

    // Latency from input-operand index to output-operand index; pairs not
    // listed fall back to the scalar default.
    int latency_default = 1;
    std::map<std::pair<int, int>, int> latency_pairs;

    bool requires_complex_decoder = false;
    // Instructions decodable on simple decoders alongside this
    // complex-decoded instruction; -1 = config default (all of them).
    int simple_alongside = -1;

    std::set<std::string> macro_fusible_first_with;  // branch-condition classes
    std::string branch_class;                        // set on conditional branches
    bool is_fusible_branch = false;

    bool has_lcp = false;
    bool is_zero_idiom = false;  // when both operands are the same register
    bool is_nop = false;
    MoveElimClass move_elim_class = MoveElimClass::none;
    bool unlaminates = false;
    bool dsb_double_slot = false;
    bool is_branch = false;
    bool is_cond_branch = false;

    int mem_reads = 0;
    int mem_writes = 0;

    bool divider_unit = false;
    bool is_cpuid = false;
    bool is_x87_push = false;
    bool is_x87_pop = false;
    bool is_tzcnt = false;
    int min_supported_uarch = 0;  // generation ordinal

    // Operand access modes aligned with the key's operand signature:
    // 'r', 'w', or "rw" per operand (space separated in the table file).
    std::vector<std::string> operand_modes;
    bool reads_flags = false;
    bool writes_flags = false;

    // Encoding defaults used when a block listing omits annotations.
    int default_len = 0;           // 0 = none; parse requires |len=
    int default_opcode_offset = 0;

    int latency_for(int in_op, int out_op) const;
};

struct InstrTable {
    std::string uarch_name;
    std::string table_version;
    std::map<std::string, InstrDescriptor> entries;

    // nullptr for unknown keys; lookup() throws UnknownInstructionError.
    const InstrDescriptor* find(const std::string& key) const;
    const InstrDescriptor& lookup(const std::string& key) const;
    size_t size() const { return entries.size(); }

    bool operator==(const InstrTable& o) const;
};

InstrTable load_instr_table(const std::string& path);
InstrTable parse_instr_table(std::istream& in, const std::string& source);
std::string serialize_instr_table(const InstrTable& table);
void validate_descriptor(const InstrDescriptor& d);  // throws ValidationError

}  // namespace uica
