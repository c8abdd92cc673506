#include "uica/registers.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace uica {

std::vector<Reg> RegSet::regs() const {
    std::vector<Reg> out;
    for (int i = 0; i < 32; i++) {
        if (bits & (1u << i)) {
            if (i < kNumGpr)
                out.push_back({RegClass::gpr, i});
            else
                out.push_back({RegClass::vec, i - kNumGpr});
        }
    }
    return out;
}

namespace {

// Legacy GPR names in hardware-encoding order.
constexpr std::array<const char*, 8> k64 = {"rax", "rcx", "rdx", "rbx",
                                            "rsp", "rbp", "rsi", "rdi"};
constexpr std::array<const char*, 8> k32 = {"eax", "ecx", "edx", "ebx",
                                            "esp", "ebp", "esi", "edi"};
constexpr std::array<const char*, 8> k16 = {"ax", "cx", "dx", "bx",
                                            "sp", "bp", "si", "di"};
constexpr std::array<const char*, 8> k8 = {"al", "cl", "dl", "bl",
                                           "spl", "bpl", "sil", "dil"};
constexpr std::array<const char*, 4> k8h = {"ah", "ch", "dh", "bh"};

}  // namespace

std::optional<RegName> parse_register(const std::string& name) {
    std::string n;
    n.reserve(name.size());
    for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    for (int i = 0; i < 8; i++) {
        if (n == k64[i]) return RegName{{RegClass::gpr, i}, 64};
        if (n == k32[i]) return RegName{{RegClass::gpr, i}, 32};
        if (n == k16[i]) return RegName{{RegClass::gpr, i}, 16};
        if (n == k8[i]) return RegName{{RegClass::gpr, i}, 8};
    }
    for (int i = 0; i < 4; i++)
        if (n == k8h[i]) return RegName{{RegClass::gpr, i}, 8};

    // r8..r15 with optional d/w/b suffix
    if (n.size() >= 2 && n[0] == 'r' && std::isdigit(static_cast<unsigned char>(n[1]))) {
        size_t pos = 1;
        int num = 0;
        while (pos < n.size() && std::isdigit(static_cast<unsigned char>(n[pos]))) {
            num = num * 10 + (n[pos] - '0');
            pos++;
        }
        if (num >= 8 && num <= 15) {
            std::string suffix = n.substr(pos);
            if (suffix.empty()) return RegName{{RegClass::gpr, num}, 64};
            if (suffix == "d") return RegName{{RegClass::gpr, num}, 32};
            if (suffix == "w") return RegName{{RegClass::gpr, num}, 16};
            if (suffix == "b") return RegName{{RegClass::gpr, num}, 8};
        }
        return std::nullopt;
    }

    if (n.rfind("xmm", 0) == 0 || n.rfind("ymm", 0) == 0) {
        std::string digits = n.substr(3);
        if (digits.empty() ||
            !std::all_of(digits.begin(), digits.end(),
                         [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return std::nullopt;
        int num = std::stoi(digits);
        if (num >= 0 && num <= 15)
            return RegName{{RegClass::vec, num}, n[0] == 'y' ? 256 : 128};
    }
    return std::nullopt;
}

std::string gpr_name(int index) {
    if (index < 8) {
        std::string n = k64[index];
        for (auto& c : n) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return n;
    }
    return "R" + std::to_string(index);
}

}  // namespace uica
