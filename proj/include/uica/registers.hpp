#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace uica {

// Architectural registers, canonicalized to their full-width family:
// AX, EAX and RAX all map to GPR 0. Dependency tracking works at family
// granularity (partial-register renaming is not modeled).
enum class RegClass { gpr, vec };

struct Reg {
    RegClass cls;
    int index;  // gpr: hardware encoding number 0..15; vec: xmm index

    bool operator==(const Reg& o) const { return cls == o.cls && index == o.index; }
    bool operator<(const Reg& o) const {
        if (cls != o.cls) return cls < o.cls;
        return index < o.index;
    }
};

constexpr int kNumGpr = 16;

// Bitmask over the 32 canonical registers (16 GPR + 16 vector).
struct RegSet {
    uint32_t bits = 0;

    static int bit_of(Reg r) {
        return (r.cls == RegClass::gpr ? 0 : kNumGpr) + r.index;
    }
    void add(Reg r) { bits |= 1u << bit_of(r); }
    bool contains(Reg r) const { return bits & (1u << bit_of(r)); }
    bool empty() const { return bits == 0; }
    bool intersects(const RegSet& o) const { return bits & o.bits; }
    void merge(const RegSet& o) { bits |= o.bits; }
    bool operator==(const RegSet& o) const { return bits == o.bits; }
    std::vector<Reg> regs() const;
};

// Operand width in bits (8/16/32/64 for GPRs, 128 for xmm).
struct RegName {
    Reg reg;
    int width;
};

// Parses an x86 register name ("rax", "ax", "r11d", "xmm3", ...);
// returns nullopt if the token is not a register.
std::optional<RegName> parse_register(const std::string& name);

// Canonical display name of a GPR family ("RAX", "R15", ...).
std::string gpr_name(int index);

}  // namespace uica
