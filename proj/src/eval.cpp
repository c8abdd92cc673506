#include "uica/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uica/errors.hpp"
#include "uica/record_file.hpp"

namespace uica {

BlockStats block_stats(const BasicBlock& block) {
    BlockStats s;
    s.n = static_cast<int>(block.instructions.size());
    for (const auto& ins : block.instructions) {
        s.m_r += ins.desc->mem_reads;
        s.m_w += ins.desc->mem_writes;
    }
    return s;
}

double baseline_unroll(const BlockStats& stats, const UarchConfig& config) {
    double w = config.stores_per_cycle;
    return std::max({stats.n / 4.0, stats.m_r / 2.0, stats.m_w / w});
}

double baseline_loop(const BlockStats& stats, const UarchConfig& config) {
    double w = config.stores_per_cycle;
    double i = config.issue_width;
    return std::max({1.0, (stats.n - 1) / i, stats.m_r / 2.0, stats.m_w / w});
}

double mape(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw ValidationError("mape of an empty list");
    double sum = 0.0;
    for (const auto& [measured, predicted] : pairs) {
        if (measured <= 0) throw ValidationError("mape requires positive measurements");
        sum += std::abs(predicted - measured) / measured;
    }
    return 100.0 * sum / static_cast<double>(pairs.size());
}

namespace {

// Counts inversions by y within the x-sorted order (merge sort).
long count_inversions(std::vector<double>& v, std::vector<double>& tmp, size_t lo, size_t hi) {
    if (hi - lo < 2) return 0;
    size_t mid = (lo + hi) / 2;
    long inv = count_inversions(v, tmp, lo, mid) + count_inversions(v, tmp, mid, hi);
    size_t a = lo, b = mid, o = lo;
    while (a < mid && b < hi) {
        if (v[b] < v[a]) {
            inv += static_cast<long>(mid - a);
            tmp[o++] = v[b++];
        } else {
            tmp[o++] = v[a++];
        }
    }
    while (a < mid) tmp[o++] = v[a++];
    while (b < hi) tmp[o++] = v[b++];
    std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
    return inv;
}

long tie_pairs(const std::vector<double>& sorted) {
    long total = 0, run = 1;
    for (size_t i = 1; i <= sorted.size(); i++) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            run++;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total;
}

}  // namespace

KendallResult kendall_tau(const std::vector<std::pair<double, double>>& pairs) {
    size_t n = pairs.size();
    if (n < 2) throw ValidationError("kendall_tau needs at least two pairs");
    long n0 = static_cast<long>(n) * static_cast<long>(n - 1) / 2;

    std::vector<std::pair<double, double>> s(pairs);
    std::sort(s.begin(), s.end());

    std::vector<double> xs(n), ys(n);
    for (size_t i = 0; i < n; i++) {
        xs[i] = s[i].first;
        ys[i] = s[i].second;
    }
    long n1 = tie_pairs(xs);
    // joint ties: pairs tied in both coordinates
    long n3 = 0;
    {
        long run = 1;
        for (size_t i = 1; i <= n; i++) {
            if (i < n && s[i] == s[i - 1]) {
                run++;
            } else {
                n3 += run * (run - 1) / 2;
                run = 1;
            }
        }
    }
    std::vector<double> ys_for_ties(ys);
    std::sort(ys_for_ties.begin(), ys_for_ties.end());
    long n2 = tie_pairs(ys_for_ties);

    // discordant pairs: y-inversions among pairs not tied in x
    std::vector<double> yv(ys), tmp(n);
    long inversions = count_inversions(yv, tmp, 0, n);
    // inversions within x-tie runs are not discordant; s is sorted by (x, y),
    // so y is ascending within each run and contributes no inversions
    long discordant = inversions;
    long concordant = n0 - n1 - n2 + n3 - discordant;

    KendallResult r;
    double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                   std::sqrt(static_cast<double>(n0 - n2));
    if (denom == 0.0) {
        r.degenerate = true;
        r.tau = 0.0;
        return r;
    }
    r.tau = static_cast<double>(concordant - discordant) / denom;
    return r;
}

long HeatmapBins::in_range_total() const {
    long total = 0;
    for (const auto& row : counts)
        for (long c : row) total += c;
    return total;
}

HeatmapBins heatmap_bins(const std::vector<std::pair<double, double>>& pairs, double bin_width,
                         double cutoff) {
    if (bin_width <= 0) throw ValidationError("heatmap bin width must be positive");
    HeatmapBins h;
    h.bin_width = bin_width;
    h.cutoff = cutoff;
    size_t bins = static_cast<size_t>(std::ceil(cutoff / bin_width));
    h.counts.assign(bins, std::vector<long>(bins, 0));
    for (const auto& [measured, predicted] : pairs) {
        if (measured < 0 || measured >= cutoff || predicted < 0 || predicted >= cutoff) {
            h.out_of_range++;
            continue;
        }
        size_t bm = static_cast<size_t>(measured / bin_width);
        size_t bp = static_cast<size_t>(predicted / bin_width);
        h.counts[bm][bp]++;
    }
    return h;
}

std::map<std::string, double> load_prediction_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open prediction file: " + path);
    std::map<std::string, double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream is(t);
        std::string id;
        double v;
        if (!(is >> id >> v))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'id value'");
        out[id] = v;
    }
    return out;
}

EvalReport run_eval(const std::vector<BenchmarkRecord>& suite, const InstrTable& table,
                    const UarchConfig& config, const EvalOptions& options) {
    EvalReport report;
    std::vector<const BenchmarkRecord*> kept;
    for (const auto& b : suite) {
        FilterResult f = filter_benchmark(b.block, table, config);
        if (!f.keep) {
            report.rejections[reject_reason_name(f.reason)]++;
            continue;
        }
        if (!b.measured_tp) {
            report.without_measurement++;
            continue;
        }
        kept.push_back(&b);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const BenchmarkRecord* a, const BenchmarkRecord* b) {
                         return a->id < b->id;
                     });
    for (const auto* b : kept) report.rows.push_back({b->id, *b->measured_tp});

    std::map<std::string, std::map<std::string, double>> file_predictions;
    for (const auto& spec : options.predictors) {
        PredictorResult pr;
        pr.name = spec;
        if (spec.rfind("file:", 0) == 0 && !file_predictions.count(spec))
            file_predictions[spec] = load_prediction_file(spec.substr(5));
        for (const auto* b : kept) {
            double pred = 0.0;  // crash/missing convention
            if (spec == "uica") {
                try {
                    SimOptions s = options.sim;
                    s.mode = options.mode;
                    pred = simulate(b->block, table, config, s).predicted_tp;
                } catch (const std::exception&) {
                    pred = 0.0;
                }
            } else if (spec == "baseline") {
                BlockStats st = block_stats(b->block);
                pred = options.mode == SimMode::loop ? baseline_loop(st, config)
                                                     : baseline_unroll(st, config);
            } else if (spec.rfind("file:", 0) == 0) {
                const auto& preds = file_predictions[spec];
                auto v = preds.find(b->id);
                if (v != preds.end()) pred = v->second;
            } else {
                throw ValidationError("unknown predictor '" + spec + "'");
            }
            pr.predictions.push_back(pred);
        }
        if (!kept.empty()) {
            std::vector<std::pair<double, double>> mp;
            for (size_t i = 0; i < kept.size(); i++)
                mp.push_back({report.rows[i].measured, pr.predictions[i]});
            pr.mape = mape(mp);
            if (mp.size() >= 2) pr.tau = kendall_tau(mp);
        }
        report.predictors.push_back(std::move(pr));
    }
    return report;
}

std::string render_report(const EvalReport& report) {
    std::string out;
    char buf[256];
    snprintf(buf, sizeof buf, "benchmarks: %zu kept, %d without measurement\n",
             report.rows.size(), report.without_measurement);
    out += buf;
    for (const auto& [reason, count] : report.rejections) {
        snprintf(buf, sizeof buf, "rejected %-26s %d\n", (reason + ":").c_str(), count);
        out += buf;
    }
    out += "\n";
    snprintf(buf, sizeof buf, "%-24s %10s %14s\n", "predictor", "MAPE", "Kendall tau");
    out += buf;
    for (const auto& p : report.predictors) {
        snprintf(buf, sizeof buf, "%-24s %9.4f%% %14.4f%s\n", p.name.c_str(), p.mape, p.tau.tau,
                 p.tau.degenerate ? " (degenerate)" : "");
        out += buf;
    }
    out += "\n";
    out += "id";
    for (const auto& p : report.predictors) out += "\t" + p.name;
    out += "\tmeasured\n";
    for (size_t i = 0; i < report.rows.size(); i++) {
        out += report.rows[i].id;
        for (const auto& p : report.predictors) {
            snprintf(buf, sizeof buf, "\t%.4f", p.predictions[i]);
            out += buf;
        }
        snprintf(buf, sizeof buf, "\t%.4f\n", report.rows[i].measured);
        out += buf;
    }
    return out;
}

std::string render_heatmap(const HeatmapBins& bins) {
    std::string out;
    char buf[64];
    for (const auto& row : bins.counts) {
        for (size_t j = 0; j < row.size(); j++) {
            snprintf(buf, sizeof buf, j + 1 < row.size() ? "%ld\t" : "%ld", row[j]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace uica
