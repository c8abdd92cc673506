// Acceptance suite: one checked, printed result line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "../test_support.hpp"
#include "uica/backend.hpp"
#include "uica/eval.hpp"
#include "uica/frontend.hpp"
#include "uica/sim.hpp"

using namespace uica;

namespace {

void report(int criterion, bool ok, const std::string& what) {
    printf("criterion %d: %-4s %s\n", criterion, ok ? "PASS" : "FAIL", what.c_str());
    fflush(stdout);
    CHECK_MESSAGE(ok, "criterion ", criterion, ": ", what);
}

double run_tp(const std::string& arch, const std::string& listing, SimMode mode) {
    auto table = testsup::table_for(arch);
    auto cfg = testsup::config_for(arch);
    auto block = parse_block(listing, table, 0);
    SimOptions opt;
    opt.mode = mode;
    return simulate(block, table, cfg, opt).predicted_tp;
}

}  // namespace

TEST_CASE("criterion 1: loop-mode worked example") {
    auto start = std::chrono::steady_clock::now();
    double tp = run_tp("SKL", "ADD AX, 0x1234; DEC R15; JNZ loop", SimMode::loop);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool ok = std::abs(tp - 1.00) <= 0.05 && secs < 1.0;
    char buf[160];
    snprintf(buf, sizeof buf,
             "loop ADD AX,0x1234; DEC R15; JNZ on SKL -> %.3f cyc/iter (want 1.00 +/- 0.05, "
             "%.2fs)",
             tp, secs);
    report(1, ok, buf);
}

TEST_CASE("criterion 2: unroll-mode worked example") {
    auto start = std::chrono::steady_clock::now();
    double tp = run_tp("SKL", "ADD AX, 0x1234; DEC R15", SimMode::unroll);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool ok = std::abs(tp - 3.44) <= 0.15 && secs < 1.0;
    char buf[160];
    snprintf(buf, sizeof buf,
             "unroll ADD AX,0x1234; DEC R15 on SKL -> %.3f cyc/iter (want 3.44 +/- 0.15, %.2fs)",
             tp, secs);
    report(2, ok, buf);
}

TEST_CASE("criterion 3: memory-dependence example and aliasing filter") {
    double tp = run_tp("HSW", "MOV [R9], R8; MOV R8, [R9]; DEC R11; JNZ loop", SimMode::loop);
    auto table = testsup::table_for("HSW");
    auto cfg = testsup::config_for("HSW");
    auto ambiguous = parse_block("MOV [R9], R8; MOV R8, [R10]; DEC R11; JNZ loop", table, 0);
    FilterResult f = filter_benchmark(ambiguous, table, cfg);
    bool ok = std::abs(tp - 5.0) <= 1.0 && !f.keep &&
              f.reason == RejectReason::ambiguous_mem_alias;
    char buf[200];
    snprintf(buf, sizeof buf,
             "store-forward loop on HSW -> %.3f cyc/iter (want 5 +/- 1); R10 variant rejected "
             "as %s",
             tp, reject_reason_name(f.reason).c_str());
    report(3, ok, buf);
}

namespace {

// Straight-line restatement of the assignment rules, written against the
// rule text rather than the simulator: candidates sorted by (load, -port).
struct RefPortState {
    std::vector<int> outstanding;
    bool alt = false;
};

int ref_assign(RefPortState& st, const std::vector<int>& allowed, int slot) {
    int chosen;
    if (allowed.size() == 1) {
        chosen = allowed[0];
    } else if (allowed.size() == 2 &&
               ((allowed[0] == 2 && allowed[1] == 3) || (allowed[0] == 3 && allowed[1] == 2))) {
        chosen = st.alt ? 3 : 2;
        st.alt = !st.alt;
    } else {
        std::vector<std::pair<int, int>> order;  // (count, -port)
        for (int p : allowed) order.push_back({st.outstanding[p], -p});
        std::sort(order.begin(), order.end());
        int p_min = -order[0].second;
        int p_min2 = -order[1].second;
        if (std::abs(p_min - p_min2) >= 3) p_min2 = p_min;
        chosen = (slot % 2 == 0) ? p_min : p_min2;
    }
    st.outstanding[chosen]++;
    return chosen;
}

}  // namespace

TEST_CASE("criterion 4: port-assignment conformance") {
    std::mt19937_64 rng(20260810);
    PortAssignState impl(8);
    RefPortState ref;
    ref.outstanding.assign(8, 0);
    int mismatches = 0;
    for (int step = 0; step < 1000; step++) {
        std::vector<int> allowed;
        int shape = static_cast<int>(rng() % 5);
        if (shape == 0) {
            allowed = {2, 3};
        } else if (shape == 1) {
            allowed = {static_cast<int>(rng() % 8)};
        } else {
            int size = 2 + static_cast<int>(rng() % 3);
            while (static_cast<int>(allowed.size()) < size) {
                int p = static_cast<int>(rng() % 8);
                if (std::find(allowed.begin(), allowed.end(), p) == allowed.end())
                    allowed.push_back(p);
            }
            std::sort(allowed.begin(), allowed.end());
        }
        int slot = static_cast<int>(rng() % 4);
        PortSet set;
        for (int p : allowed) set.add(p);
        int a = assign_port(impl, set, slot);
        int b = ref_assign(ref, allowed, slot);
        if (a != b) mismatches++;
        // a random completed uop leaves its port
        if (rng() % 2) {
            std::vector<int> busy;
            for (int p = 0; p < 8; p++)
                if (impl.outstanding[p] > 0) busy.push_back(p);
            if (!busy.empty()) {
                int p = busy[rng() % busy.size()];
                impl.outstanding[p]--;
                ref.outstanding[p]--;
            }
        }
        if (impl.outstanding != ref.outstanding) mismatches++;
    }
    char buf[120];
    snprintf(buf, sizeof buf, "1000 randomized steps against the rule-text reference: %d mismatches",
             mismatches);
    report(4, mismatches == 0, buf);
}

namespace {

// Brute-force predecode timing computed directly from the stage rules:
// one 16-byte block fetched per cycle, at most five instructions per cycle,
// charged to the block where they end, plus the full-width crossing penalty.
void oracle_predecode(const int* len, const int* opoff, int k, long* out_cycle) {
    int start[12], end_block[12], start_block[12];
    int pos = 0;
    for (int i = 0; i < k; i++) {
        start[i] = pos;
        pos += len[i];
        start_block[i] = start[i] / 16;
        end_block[i] = (pos - 1) / 16;
    }
    long cycle = -1;
    int i = 0;
    int max_block = end_block[k - 1];
    for (int b = 0; b <= max_block; b++) {
        cycle++;  // this block is fetched
        int ge = i;
        while (ge < k && end_block[ge] == b) ge++;
        int cur = i;
        while (cur < ge) {
            int take = std::min(5, ge - cur);
            for (int j = 0; j < take; j++) out_cycle[cur + j] = cycle;
            cur += take;
            if (take == 5 && cur == ge && cur < k) {
                bool crosses = start_block[cur] == b && end_block[cur] > b;
                bool opcode_here = (start[cur] + opoff[cur]) / 16 == b;
                if (crosses && opcode_here) cycle++;  // penalty stall
            }
            if (cur < ge) cycle++;  // same block, next predecode group
        }
        i = ge;
    }
}

struct PredecodeCheck {
    long runs = 0;
    long mismatches = 0;
    long width_violations = 0;
    Predecoder pd;
    std::deque<FetchedInstr> pending;
    std::vector<FetchedInstr> out;

    explicit PredecodeCheck(const UarchConfig& cfg) : pd(cfg) {}

    void check(const UarchConfig& cfg, const int* len, const int* opoff, int k) {
        runs++;
        pending.clear();
        int pos = 0;
        for (int i = 0; i < k; i++) {
            FetchedInstr f;
            f.instr = i;
            int start = pos;
            pos += len[i];
            f.fetch_block = (pos - 1) / 16;
            f.span_blocks = static_cast<int>(f.fetch_block) - start / 16;
            f.opcode_in_start_block = (start + opoff[i]) / 16 == start / 16;
            pending.push_back(f);
        }
        long got[12], want[12];
        pd = Predecoder(cfg);
        long cycle = 0;
        int emitted_total = 0;
        while (emitted_total < k && cycle < 200) {
            out.clear();
            int n = pd.step(pending, 100, out);
            if (n > 5) width_violations++;
            for (const auto& e : out) got[e.instr] = cycle;
            emitted_total += n;
            cycle++;
        }
        oracle_predecode(len, opoff, k, want);
        for (int i = 0; i < k; i++)
            if (got[i] != want[i]) {
                mismatches++;
                break;
            }
    }
};

}  // namespace

TEST_CASE("criterion 5: predecoder conformance over two 16-byte blocks") {
    auto cfg = testsup::config_for("SKL");
    PredecodeCheck chk(cfg);
    int len[12], opoff[12];
    // exhaustive: all compositions of 32 bytes into at most 10 instructions
    std::function<void(int, int)> enumerate = [&](int total, int k) {
        if (total == 32) {
            if (k >= 1) {
                for (int i = 0; i < k; i++) opoff[i] = 0;
                chk.check(cfg, len, opoff, k);
            }
            return;
        }
        if (k >= 10) return;
        int remaining = 32 - total;
        int max_len = std::min(15, remaining);
        // the tail must still be coverable with the remaining slots
        for (int l = 1; l <= max_len; l++) {
            if (remaining - l > 15 * (10 - k - 1)) continue;
            len[k] = l;
            enumerate(total + l, k + 1);
        }
    };
    enumerate(0, 0);
    long exhaustive_runs = chk.runs;

    // randomized opcode offsets cover the only-prefix-bytes exemption
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200000; trial++) {
        int k = 0, total = 0;
        while (k < 10 && total < 32) {
            int l = 1 + static_cast<int>(rng() % 15);
            if (l > 32 - total) l = 32 - total;
            len[k] = l;
            opoff[k] = static_cast<int>(rng() % l);
            total += l;
            k++;
        }
        chk.check(cfg, len, opoff, k);
    }
    char buf[200];
    snprintf(buf, sizeof buf,
             "%ld exhaustive + 200000 randomized traces: %ld mismatches, %ld width violations",
             exhaustive_runs, chk.mismatches, chk.width_violations);
    report(5, chk.mismatches == 0 && chk.width_violations == 0, buf);
}

TEST_CASE("criterion 6: metrics against independent oracles") {
    std::mt19937_64 rng(99);
    long tau_mismatches = 0;
    for (int trial = 0; trial < 1000; trial++) {
        size_t n = 2 + rng() % 199;
        std::vector<std::pair<double, double>> pairs;
        for (size_t i = 0; i < n; i++)
            pairs.push_back({static_cast<double>(rng() % 20) / 2.0,
                             static_cast<double>(rng() % 20) / 2.0});
        // O(n^2) enumeration
        long c = 0, d = 0, tx = 0, ty = 0;
        for (size_t i = 0; i < n; i++)
            for (size_t j = i + 1; j < n; j++) {
                double dx = pairs[i].first - pairs[j].first;
                double dy = pairs[i].second - pairs[j].second;
                if (dx == 0 && dy == 0) continue;
                if (dx == 0)
                    tx++;
                else if (dy == 0)
                    ty++;
                else if ((dx > 0) == (dy > 0))
                    c++;
                else
                    d++;
            }
        long n0 = static_cast<long>(n) * (n - 1) / 2;
        double denom = std::sqrt(static_cast<double>(n0 - (n0 - (c + d + ty)))) *
                       std::sqrt(static_cast<double>(n0 - (n0 - (c + d + tx))));
        auto got = kendall_tau(pairs);
        if (denom == 0) {
            if (!got.degenerate) tau_mismatches++;
        } else {
            double want = (c - d) / denom;
            if (std::abs(got.tau - want) > 1e-12) tau_mismatches++;
        }
    }

    // mape and the baselines against direct evaluation
    long metric_mismatches = 0;
    auto cfg = testsup::config_for("CLX");
    for (int trial = 0; trial < 1000; trial++) {
        std::vector<std::pair<double, double>> pairs;
        size_t n = 1 + rng() % 40;
        double direct = 0;
        for (size_t i = 0; i < n; i++) {
            double m = 0.25 + static_cast<double>(rng() % 40);
            double p = static_cast<double>(rng() % 40);
            pairs.push_back({m, p});
            direct += std::abs(p - m) / m;
        }
        direct = direct * 100.0 / static_cast<double>(n);
        if (std::abs(mape(pairs) - direct) > 1e-12 * std::max(1.0, direct))
            metric_mismatches++;

        BlockStats st{1 + static_cast<int>(rng() % 30), static_cast<int>(rng() % 10),
                      static_cast<int>(rng() % 10)};
        double bu = std::max(st.n / 4.0, std::max(st.m_r / 2.0,
                                                  st.m_w / double(cfg.stores_per_cycle)));
        double bl = std::max(std::max(1.0, (st.n - 1) / double(cfg.issue_width)),
                             std::max(st.m_r / 2.0, st.m_w / double(cfg.stores_per_cycle)));
        if (std::abs(baseline_unroll(st, cfg) - bu) > 1e-12 * std::max(1.0, bu))
            metric_mismatches++;
        if (std::abs(baseline_loop(st, cfg) - bl) > 1e-12 * std::max(1.0, bl))
            metric_mismatches++;
    }
    char buf[160];
    snprintf(buf, sizeof buf,
             "kendall tau: %ld mismatches in 1000 traces; mape/baselines: %ld mismatches",
             tau_mismatches, metric_mismatches);
    report(6, tau_mismatches == 0 && metric_mismatches == 0, buf);
}

namespace {

struct MiniSuite {
    InstrTable table;
    UarchConfig cfg;
    std::vector<BenchmarkRecord> raw;     // unrolled-execution form
    std::vector<BenchmarkRecord> looped;  // loop form

    MiniSuite()
        : table(testsup::table_for("CLX")), cfg(testsup::config_for("CLX")) {
        auto loaded = load_suite(testsup::data_dir() + "/suites/mini50.suite", table);
        REQUIRE(loaded.records.size() == 50);
        REQUIRE(loaded.skipped == 0);
        raw = loaded.records;
        for (const auto& b : raw) {
            auto loop = make_loop_variant(b.block, table);
            REQUIRE(loop.has_value());
            BenchmarkRecord r = b;
            r.block = *loop;
            looped.push_back(std::move(r));
        }
    }

    std::vector<double> predictions(const Ablations& ab, bool loop_mode) const {
        std::vector<double> out;
        const auto& suite = loop_mode ? looped : raw;
        for (const auto& b : suite) {
            SimOptions opt;
            opt.mode = loop_mode ? SimMode::loop : SimMode::unroll;
            opt.ablations = ab;
            out.push_back(simulate(b.block, table, cfg, opt).predicted_tp);
        }
        return out;
    }
};

}  // namespace

TEST_CASE("criteria 7-9: mini-suite ablations, invariants and determinism") {
    MiniSuite suite;
    auto full_unroll = suite.predictions({}, false);
    auto full_loop = suite.predictions({}, true);

    // criterion 7: each model component matters
    struct AblationSpec {
        const char* name;
        Ablations ab;
    };
    std::vector<AblationSpec> ablations;
    {
        AblationSpec a{"unbounded front end", {}};
        a.ab.unbounded_front_end = true;
        ablations.push_back(a);
        AblationSpec b{"random port assignment", {}};
        b.ab.random_port_assignment = true;
        b.ab.random_port_seed = 12345;
        ablations.push_back(b);
        AblationSpec c{"no micro-fusion", {}};
        c.ab.no_micro_fusion = true;
        ablations.push_back(c);
        AblationSpec d{"no macro-fusion", {}};
        d.ab.no_macro_fusion = true;
        ablations.push_back(d);
        AblationSpec e{"no LSD unrolling", {}};
        e.ab.no_lsd_unroll = true;
        ablations.push_back(e);
        AblationSpec f{"no move elimination", {}};
        f.ab.no_move_elimination = true;
        ablations.push_back(f);
    }
    bool all_ok = true;
    std::string details;
    for (const auto& spec : ablations) {
        auto unroll = suite.predictions(spec.ab, false);
        auto loop = suite.predictions(spec.ab, true);
        int changed = 0;
        std::vector<std::pair<double, double>> pairs;
        for (size_t i = 0; i < full_unroll.size(); i++) {
            if (std::abs(unroll[i] - full_unroll[i]) > 1e-9) changed++;
            if (std::abs(loop[i] - full_loop[i]) > 1e-9) changed++;
            pairs.push_back({full_unroll[i], unroll[i]});
            pairs.push_back({full_loop[i], loop[i]});
        }
        double err = mape(pairs);
        bool ok = changed >= 1 && err > 0.0;
        all_ok = all_ok && ok;
        char buf[128];
        snprintf(buf, sizeof buf, "%s[%s: %d changed, mape %.2f%%]", details.empty() ? "" : " ",
                 spec.name, changed, err);
        details += buf;
    }
    report(7, all_ok, "ablations vs the full model: " + details);

    // criterion 8: structural invariants hold on every benchmark
    long checked = 0;
    bool invariants_ok = true;
    std::string first_failure;
    auto run_checked = [&](const BenchmarkRecord& b, SimMode mode, const InstrTable& t,
                           const UarchConfig& c) {
        SimOptions opt;
        opt.mode = mode;
        opt.check_invariants = true;
        try {
            simulate(b.block, t, c, opt);
            checked++;
        } catch (const std::exception& e) {
            invariants_ok = false;
            if (first_failure.empty()) first_failure = b.id + ": " + e.what();
        }
    };
    for (const auto& b : suite.raw) run_checked(b, SimMode::unroll, suite.table, suite.cfg);
    for (const auto& b : suite.looped) run_checked(b, SimMode::loop, suite.table, suite.cfg);
    {
        auto skl_t = testsup::table_for("SKL");
        auto skl_c = testsup::config_for("SKL");
        BenchmarkRecord w1{"w1", parse_block("ADD AX, 0x1234; DEC R15; JNZ l", skl_t, 0), {}, ""};
        run_checked(w1, SimMode::loop, skl_t, skl_c);
        BenchmarkRecord w2{"w2", parse_block("ADD AX, 0x1234; DEC R15", skl_t, 0), {}, ""};
        run_checked(w2, SimMode::unroll, skl_t, skl_c);
        auto hsw_t = testsup::table_for("HSW");
        auto hsw_c = testsup::config_for("HSW");
        BenchmarkRecord w3{"w3",
                           parse_block("MOV [R9], R8; MOV R8, [R9]; DEC R11; JNZ l", hsw_t, 0),
                           {},
                           ""};
        run_checked(w3, SimMode::loop, hsw_t, hsw_c);
    }
    char buf8[160];
    snprintf(buf8, sizeof buf8,
             "capacity/ordering/conservation checks on %ld assertion-instrumented runs%s%s",
             checked, invariants_ok ? "" : "; first failure: ", first_failure.c_str());
    report(8, invariants_ok, buf8);

    // criterion 9: byte-identical evaluation reports
    EvalOptions eopt;
    eopt.mode = SimMode::unroll;
    eopt.predictors = {"uica", "baseline"};
    auto rep1 = render_report(run_eval(suite.raw, suite.table, suite.cfg, eopt));
    auto rep2 = render_report(run_eval(suite.raw, suite.table, suite.cfg, eopt));
    EvalOptions lopt;
    lopt.mode = SimMode::loop;
    lopt.predictors = {"uica", "baseline"};
    auto rep3 = render_report(run_eval(suite.looped, suite.table, suite.cfg, lopt));
    auto rep4 = render_report(run_eval(suite.looped, suite.table, suite.cfg, lopt));
    bool deterministic = rep1 == rep2 && rep3 == rep4 && !rep1.empty();
    report(9, deterministic, "two eval runs per mode produce byte-identical reports");
}
