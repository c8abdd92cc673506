#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uica/isa.hpp"
#include "uica/registers.hpp"
#include "uica/uarch.hpp"

namespace uica {

struct MemOperand {
    RegSet regs;          // base and index registers
    int64_t displacement = 0;
    bool indexed = false;
    bool is_write = false;
};

struct BlockInstruction {
    std::string key;   // into the instruction table
    std::string text;  // original listing line
    const InstrDescriptor* desc = nullptr;

    int byte_length = 0;     // 1..15
    int opcode_offset = 0;   // byte index of the primary opcode within the encoding

    RegSet reads;            // register inputs (incl. address registers)
    RegSet writes;           // register outputs
    RegSet address_regs;     // registers used in memory addressing
    std::vector<MemOperand> mem_ops;

    bool zero_idiom_instance = false;  // e.g. XOR RAX, RAX (same register)
    bool move_src_valid = false;       // register-to-register move: src/dst tracked
    Reg move_src{RegClass::gpr, 0};
    Reg move_dst{RegClass::gpr, 0};
};

struct BasicBlock {
    std::vector<BlockInstruction> instructions;
    int alignment_offset = 0;  // bytes relative to a 64-byte line

    bool ends_with_branch() const;
    int byte_size() const;
    // Cumulative offsets: start_offset(0) == alignment_offset.
    int start_offset(size_t i) const;
    int end_offset(size_t i) const;  // exclusive
    RegSet regs_used() const;
    RegSet regs_written() const;
};

// Parses an assembly-like listing: instruction lines separated by ';' or
// newlines, each optionally annotated with "|len=N" and "|op=K".
BasicBlock parse_block(const std::string& text, const InstrTable& table,
                       int alignment_offset = 0);

// Loop-form construction: B (unrolled to at least five body instructions
// when shorter), followed by DEC Rx; JNZ where Rx is a general-purpose
// register unused by B (highest-numbered free one). nullopt = no free
// register exists.
std::optional<BasicBlock> make_loop_variant(const BasicBlock& block, const InstrTable& table,
                                            Reg* chosen = nullptr);

enum class RejectReason {
    none,
    divider,
    cpuid,
    ambiguous_mem_alias,
    x87_unbalanced,
    x87_pop_first,
    unsupported_insn,
    icl_store_pair_ambiguous,
};

std::string reject_reason_name(RejectReason r);

struct FilterResult {
    bool keep = true;
    RejectReason reason = RejectReason::none;
};

// Static benchmark filters: drop blocks whose measured throughput depends on
// initial register/memory values or that are not meaningful on this config.
FilterResult filter_benchmark(const BasicBlock& block, const InstrTable& table,
                              const UarchConfig& config);

struct BenchmarkRecord {
    std::string id;
    BasicBlock block;
    std::optional<double> measured_tp;  // cycles/iteration
    std::string suite_id;
};

struct SuiteLoadResult {
    std::vector<BenchmarkRecord> records;
    std::string suite_id;
    int skipped = 0;
    std::vector<std::string> warnings;
};

SuiteLoadResult load_suite(const std::string& path, const InstrTable& table);
std::string serialize_suite(const std::vector<BenchmarkRecord>& records,
                            const std::string& suite_id);

}  // namespace uica
