#pragma once

#include <sstream>
#include <string>

#include "uica/block.hpp"
#include "uica/isa.hpp"
#include "uica/uarch.hpp"

namespace testsup {

inline std::string data_dir() {
    if (const char* env = std::getenv("UICA_DATA_DIR"); env && *env) return env;
    return UICA_SOURCE_DATA_DIR;
}

inline uica::InstrTable table_for(const std::string& arch) {
    return uica::load_instr_table(data_dir() + "/tables/" + arch + ".tbl");
}

inline uica::UarchConfig config_for(const std::string& arch) {
    return uica::load_config(data_dir() + "/configs/" + arch + ".cfg");
}

inline uica::InstrTable parse_table(const std::string& text) {
    std::istringstream in(text);
    return uica::parse_instr_table(in, "<test>");
}

// A small synthetic table for front-end unit tests: BYTE<len> instructions
// are 1-uop fillers, MULTI<k> decodes to k uops, LCPI carries a
// length-changing prefix, MSOP<total>_<ms> uses the microcode sequencer.
inline uica::InstrTable synthetic_table() {
    std::string t = "uarch: SKL\ntable_version: test\n";
    for (int len = 1; len <= 15; len++) {
        t += "\nkey: BYTE" + std::to_string(len) + "\n";
        t += "len: " + std::to_string(len) + "\n";
        t += "ports: 1*0156\nlatency: 1\n";
    }
    for (int k = 2; k <= 5; k++) {
        t += "\nkey: MULTI" + std::to_string(k) + "\n";
        t += "len: 4\nuops: " + std::to_string(k) + "\nports: " + std::to_string(k) +
             "*0156\nlatency: 1\n";
    }
    t += "\nkey: LCPI\nlen: 4\nopcode_offset: 1\nports: 1*0156\nlatency: 1\nlcp: true\n";
    t += "\nkey: MSOP7_3\nlen: 4\nuops: 7\nuops_ms: 3\nports: 7*0156\nlatency: 1\n"
         "complex_decoder: true\nsimple_alongside: 0\n";
    t += "\nkey: MSOP2_2\nlen: 4\nuops: 2\nuops_ms: 2\nports: 2*0156\nlatency: 1\n"
         "complex_decoder: true\nsimple_alongside: 0\n";
    t += "\nkey: CMPF R64 R64\nlen: 3\nports: 1*0156\nlatency: 1\noperands: r r\n"
         "flags: w\nfuse_with: e ne\n";
    t += "\nkey: JNZF\nlen: 2\nports: 1*6\nlatency: 1\nflags: r\nbranch: true\n"
         "cond_branch: true\nfusible_branch: true\nbranch_class: ne\n";
    return parse_table(t);
}

// Block from explicit instruction keys of the synthetic table.
inline uica::BasicBlock synthetic_block(const uica::InstrTable& table,
                                        const std::vector<std::string>& lines, int align = 0) {
    std::string text;
    for (const auto& l : lines) {
        if (!text.empty()) text += "; ";
        text += l;
    }
    return uica::parse_block(text, table, align);
}

}  // namespace testsup
