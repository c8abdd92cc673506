#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "test_support.hpp"
#include "uica/errors.hpp"
#include "uica/isa.hpp"

using namespace uica;

TEST_CASE("well-formed three-record file loads") {
    auto t = testsup::parse_table(
        "uarch: SKL\n\n"
        "key: A R64 R64\nlen: 3\nports: 1*0156\noperands: rw r\n\n"
        "key: B R64\nlen: 2\nports: 1*06\noperands: rw\n\n"
        "key: C\nlen: 1\nuops: 1\nuops_unfused: 0\nnop: true\n");
    CHECK(t.size() == 3);
    CHECK(t.uarch_name == "SKL");
}

TEST_CASE("port multiplicity sum must match the unfused uop count") {
    CHECK_THROWS_WITH_AS(testsup::parse_table("uarch: SKL\n\n"
                                              "key: BAD R64\nlen: 3\nuops: 2\nports: 1*01\n"),
                         doctest::Contains("BAD R64"), ValidationError);
}

TEST_CASE("16-bit immediate forms carry the length-changing prefix") {
    auto t = testsup::table_for("SKL");
    const InstrDescriptor& d = t.lookup("ADD R16 I16");
    CHECK(d.has_lcp);
    CHECK(d.default_len == 4);
}

TEST_CASE("lookup returns descriptors and flags unknown keys") {
    auto t = testsup::table_for("SKL");
    CHECK(t.lookup("DEC R64").uops_fused_domain == 1);
    const InstrDescriptor& nop = t.lookup("NOP");
    CHECK(nop.is_nop);
    CHECK(nop.uops_unfused == 0);
    CHECK(t.find("FAKE_INSN") == nullptr);
    CHECK_THROWS_AS(t.lookup("FAKE_INSN"), UnknownInstructionError);
}

TEST_CASE("serialize/load round trip") {
    for (const auto& arch : bundled_uarch_names()) {
        auto t = testsup::table_for(arch);
        std::string s = serialize_instr_table(t);
        std::istringstream in(s);
        auto t2 = parse_instr_table(in, "<roundtrip>");
        CHECK(t == t2);
    }
}

TEST_CASE("bundled descriptors satisfy the structural invariants") {
    for (const auto& arch : bundled_uarch_names()) {
        auto t = testsup::table_for(arch);
        auto cfg = testsup::config_for(arch);
        for (const auto& [key, d] : t.entries) {
            CAPTURE(arch);
            CAPTURE(key);
            int sum = 0;
            for (const auto& u : d.uop_ports) {
                sum += u.count;
                CHECK(!u.ports.empty());
                // every allowed port exists on this config
                CHECK(u.ports.highest() < cfg.n_ports);
            }
            CHECK(sum == d.uops_unfused);
            CHECK(d.uops_ms <= d.uops_fused_domain);
            if (d.uops_ms > 0) CHECK(d.requires_complex_decoder);
            if (d.is_fusible_branch) CHECK(d.is_cond_branch);
            bool renamer_only =
                d.is_nop || d.is_zero_idiom || d.move_elim_class != MoveElimClass::none;
            if (!renamer_only) {
                CHECK(d.uops_fused_domain >= 1);
                CHECK(d.uops_unfused >= d.uops_fused_domain);
            }
        }
    }
}

TEST_CASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(testsup::parse_table("uarch: SKL\n\n"
                                         "key: X\nlen: 1\nports: 1*0\n\n"
                                         "key: X\nlen: 1\nports: 1*0\n"),
                    ParseError);
}

TEST_CASE("microcoded instructions must use the complex decoder") {
    CHECK_THROWS_AS(
        testsup::parse_table("uarch: SKL\n\nkey: M\nlen: 2\nuops: 5\nuops_ms: 2\nports: 5*01\n"),
        ValidationError);
}

TEST_CASE("port sets are sets: digit order does not matter") {
    CHECK(PortSet::parse("0156") == PortSet::parse("6510"));
    CHECK(PortSet::parse("0156").str() == "0156");
}
