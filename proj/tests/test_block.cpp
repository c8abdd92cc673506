#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "uica/block.hpp"
#include "uica/errors.hpp"

using namespace uica;

namespace {
InstrTable skl() { return testsup::table_for("SKL"); }
}  // namespace

TEST_CASE("two-instruction listing parses with lengths and no trailing branch") {
    auto t = skl();
    auto b = parse_block("ADD AX, 0x1234 |len=4; DEC R15 |len=3", t, 0);
    REQUIRE(b.instructions.size() == 2);
    CHECK_FALSE(b.ends_with_branch());
    CHECK(b.instructions[0].key == "ADD R16 I16");
    CHECK(b.instructions[0].byte_length == 4);
    CHECK(b.instructions[1].key == "DEC R64");
    CHECK(b.end_offset(1) == 7);
}

TEST_CASE("a trailing conditional branch marks the loop form") {
    auto t = skl();
    auto b = parse_block("ADD AX, 0x1234 |len=4; DEC R15 |len=3; JNZ loop |len=2", t, 0);
    CHECK(b.ends_with_branch());
}

TEST_CASE("empty input is an error") {
    auto t = skl();
    CHECK_THROWS_AS(parse_block("", t, 0), ParseError);
    CHECK_THROWS_AS(parse_block("  ;  ; ", t, 0), ParseError);
}

TEST_CASE("byte lengths come from annotations or table defaults") {
    auto t = skl();
    auto b = parse_block("ADD AX, 0x1234; DEC R15", t, 0);  // defaults
    CHECK(b.instructions[0].byte_length == 4);
    CHECK(b.instructions[1].byte_length == 3);
    CHECK_THROWS_AS(parse_block("NOP |len=16", t, 0), ParseError);
    CHECK_THROWS_AS(parse_block("NOP |len=0", t, 0), ParseError);
}

TEST_CASE("unknown mnemonics abort parsing") {
    auto t = skl();
    CHECK_THROWS_AS(parse_block("FAKE_INSN R9", t, 0), UnknownInstructionError);
}

TEST_CASE("offsets accumulate from the alignment offset") {
    auto t = skl();
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; trial++) {
        int align = static_cast<int>(rng() % 64);
        int n = 1 + static_cast<int>(rng() % 12);
        std::string text;
        for (int i = 0; i < n; i++) {
            if (!text.empty()) text += "; ";
            text += "NOP |len=" + std::to_string(1 + rng() % 15);
        }
        auto b = parse_block(text, t, align);
        int expect = align;
        for (size_t i = 0; i < b.instructions.size(); i++) {
            CHECK(b.start_offset(i) == expect);
            expect += b.instructions[i].byte_length;
            CHECK(b.end_offset(i) == expect);
            // 16-byte block of the instruction end
            CHECK((b.end_offset(i) - 1) / 16 == (expect - 1) / 16);
        }
        CHECK(b.byte_size() + align == expect);
    }
}

TEST_CASE("loop variant unrolls short bodies to five instructions") {
    auto t = skl();
    auto b = parse_block("ADD RAX, RAX", t, 0);
    Reg chosen{RegClass::gpr, 0};
    auto loop = make_loop_variant(b, t, &chosen);
    REQUIRE(loop.has_value());
    CHECK(loop->instructions.size() == 7);  // five copies + DEC + JNZ
    CHECK(loop->ends_with_branch());
    CHECK(chosen.index == 15);  // highest-numbered free register
    CHECK(loop->instructions[5].key == "DEC R64");
    CHECK(loop->instructions[6].key == "JNZ");
}

TEST_CASE("loop variant keeps bodies of five or more instructions as they are") {
    auto t = skl();
    auto b = parse_block("ADD RAX, RBX; ADD RCX, RDX; ADD RSI, RDI; ADD R8, R9; "
                         "ADD R10, R11; ADD R12, R13",
                         t, 0);
    auto loop = make_loop_variant(b, t);
    REQUIRE(loop.has_value());
    CHECK(loop->instructions.size() == 8);
}

TEST_CASE("loop variant fails when every register is used") {
    auto t = skl();
    auto b = parse_block("ADD RAX, RBX; ADD RCX, RDX; ADD RSI, RDI; ADD RBP, RSP; "
                         "ADD R8, R9; ADD R10, R11; ADD R12, R13; ADD R14, R15",
                         t, 0);
    CHECK_FALSE(make_loop_variant(b, t).has_value());
}

TEST_CASE("loop counter never collides with block registers") {
    auto t = skl();
    std::mt19937 rng(11);
    const char* regs[] = {"RAX", "RBX", "RCX", "RDX", "RSI", "RDI", "R8",
                          "R9",  "R10", "R11", "R12", "R13", "R14", "R15"};
    for (int trial = 0; trial < 60; trial++) {
        int n = 1 + static_cast<int>(rng() % 6);
        std::string text;
        for (int i = 0; i < n; i++) {
            if (!text.empty()) text += "; ";
            text += std::string("ADD ") + regs[rng() % 14] + ", " + regs[rng() % 14];
        }
        auto b = parse_block(text, t, 0);
        Reg chosen{RegClass::gpr, 0};
        auto loop = make_loop_variant(b, t, &chosen);
        REQUIRE(loop.has_value());
        CHECK_FALSE(b.regs_used().contains(chosen));
        // trailing pair is a fusible DEC/JNZ
        auto& dec = loop->instructions[loop->instructions.size() - 2];
        auto& jcc = loop->instructions.back();
        CHECK(dec.desc->macro_fusible_first_with.count(jcc.desc->branch_class) == 1);
    }
}

TEST_CASE("aliasing filter follows the address-register rule") {
    auto t = skl();
    auto cfg = testsup::config_for("SKL");
    auto reject = [&](const std::string& text) {
        auto b = parse_block(text, t, 0);
        return filter_benchmark(b, t, cfg);
    };
    // different address registers: ambiguous
    auto r1 = reject("MOV [R9], R8; MOV R8, [R10]");
    CHECK_FALSE(r1.keep);
    CHECK(r1.reason == RejectReason::ambiguous_mem_alias);
    // same, unmodified address register: always a read-after-write dependency
    CHECK(reject("MOV [R9], R8; MOV R8, [R9]").keep);
    // address register modified by the block: ambiguous
    auto r2 = reject("MOV [R9], R8; MOV R8, [R9]; ADD R9, 0x40");
    CHECK_FALSE(r2.keep);
    CHECK(r2.reason == RejectReason::ambiguous_mem_alias);
    // read-only or write-only blocks are fine either way
    CHECK(reject("MOV R8, [R9]; MOV R11, [R10]").keep);
}

TEST_CASE("divider and cpuid instructions are filtered") {
    auto t = skl();
    auto cfg = testsup::config_for("SKL");
    auto b = parse_block("DIV R9", t, 0);
    CHECK(filter_benchmark(b, t, cfg).reason == RejectReason::divider);
    auto c = parse_block("CPUID", t, 0);
    CHECK(filter_benchmark(c, t, cfg).reason == RejectReason::cpuid);
}

TEST_CASE("TZCNT is rejected on microarchitectures that predate it") {
    auto hsw_t = testsup::table_for("HSW");
    auto hsw = testsup::config_for("HSW");
    auto b = parse_block("TZCNT RAX, RBX", hsw_t, 0);
    CHECK(filter_benchmark(b, hsw_t, hsw).keep);
    // same descriptor evaluated against an older generation
    auto snb = testsup::config_for("SNB");
    CHECK(filter_benchmark(b, hsw_t, snb).reason == RejectReason::unsupported_insn);
}

TEST_CASE("x87 stack balance filters") {
    auto t = skl();
    auto cfg = testsup::config_for("SKL");
    CHECK(filter_benchmark(parse_block("FLD1; FSTP ST0", t, 0), t, cfg).keep);
    CHECK(filter_benchmark(parse_block("FLD1", t, 0), t, cfg).reason ==
          RejectReason::x87_unbalanced);
    CHECK(filter_benchmark(parse_block("FSTP ST0; FLD1", t, 0), t, cfg).reason ==
          RejectReason::x87_pop_first);
}

TEST_CASE("store pairs must be provably same-line on two-store configs") {
    auto icl_t = testsup::table_for("ICL");
    auto icl = testsup::config_for("ICL");
    auto skl_cfg = testsup::config_for("SKL");
    auto b1 = parse_block("MOV [R9], R8; MOV [R10], R8", icl_t, 0);
    CHECK(filter_benchmark(b1, icl_t, icl).reason == RejectReason::icl_store_pair_ambiguous);
    auto skl_t = skl();
    auto b1s = parse_block("MOV [R9], R8; MOV [R10], R8", skl_t, 0);
    CHECK(filter_benchmark(b1s, skl_t, skl_cfg).keep);  // single-store-per-cycle config
    auto b2 = parse_block("MOV [R9], R8; MOV [R9+8], R8", icl_t, 0);
    CHECK(filter_benchmark(b2, icl_t, icl).keep);
    auto b3 = parse_block("MOV [R9], R8; MOV [R9+80], R8", icl_t, 0);
    CHECK(filter_benchmark(b3, icl_t, icl).reason == RejectReason::icl_store_pair_ambiguous);
}

TEST_CASE("filtering is deterministic") {
    auto t = skl();
    auto cfg = testsup::config_for("SKL");
    auto b = parse_block("MOV [R9], R8; MOV R8, [R10]", t, 0);
    auto first = filter_benchmark(b, t, cfg);
    for (int i = 0; i < 5; i++) {
        auto again = filter_benchmark(b, t, cfg);
        CHECK(again.keep == first.keep);
        CHECK(again.reason == first.reason);
    }
}

TEST_CASE("suite loading skips bad records with warnings") {
    auto t = skl();
    std::string suite =
        "suite: demo\n\n"
        "id: a\nblock: ADD RAX, RBX; ADD RCX, RDX\ntp: 1.0\n\n"
        "id: b\nblock: MOV R8, [R9]\ntp: 0\n\n"          // non-positive measurement
        "id: c\nblock: FAKE_INSN R9\ntp: 1.0\n\n"        // unknown instruction
        "id: d\nblock: NOP; NOP\ntp: 0.5\n\n"
        "id: e\nblock: DEC R15\n";                        // no measurement: kept
    std::string path = "/tmp/uica_test_suite.suite";
    {
        std::ofstream out(path);
        out << suite;
    }
    auto r = load_suite(path, t);
    CHECK(r.suite_id == "demo");
    CHECK(r.records.size() == 3);
    CHECK(r.skipped == 2);
    CHECK(r.warnings.size() == 2);
    CHECK_FALSE(r.records[2].measured_tp.has_value());
}

TEST_CASE("suite serialization round trips") {
    auto t = skl();
    auto b = parse_block("ADD AX, 0x1234; DEC R15", t, 0);
    std::vector<BenchmarkRecord> records;
    records.push_back({"x1", b, 3.44, "demo"});
    std::string text = serialize_suite(records, "demo");
    std::string path = "/tmp/uica_test_suite2.suite";
    {
        std::ofstream out(path);
        out << text;
    }
    auto r = load_suite(path, t);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].id == "x1");
    CHECK(r.records[0].block.instructions.size() == 2);
    CHECK(r.records[0].measured_tp == doctest::Approx(3.44));
}
