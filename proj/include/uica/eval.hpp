#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uica/block.hpp"
#include "uica/sim.hpp"

namespace uica {

// Per-iteration instruction and memory-access counts of a block.
struct BlockStats {
    int n = 0;    // instruction count
    int m_r = 0;  // memory reads
    int m_w = 0;  // memory writes
};

BlockStats block_stats(const BasicBlock& block);

// Lower bounds on the execution time: decode width, load ports and store
// bandwidth for unrolled execution; issue width (minus the macro-fused
// decrement/branch pair) and one iteration per cycle for loops.
double baseline_unroll(const BlockStats& stats, const UarchConfig& config);
double baseline_loop(const BlockStats& stats, const UarchConfig& config);

// Mean absolute percentage error. Predictions of crashed or missing
// predictors enter as 0 and contribute 100%.
double mape(const std::vector<std::pair<double, double>>& measured_predicted);

struct KendallResult {
    double tau = 0.0;
    bool degenerate = false;  // all pairs tied; tau defined as 0
};

// Tie-aware Kendall rank correlation (tau-b).
KendallResult kendall_tau(const std::vector<std::pair<double, double>>& pairs);

struct HeatmapBins {
    double bin_width = 1.0;
    double cutoff = 10.0;
    std::vector<std::vector<long>> counts;  // [measured bin][predicted bin]
    long out_of_range = 0;

    long in_range_total() const;
};

HeatmapBins heatmap_bins(const std::vector<std::pair<double, double>>& pairs, double bin_width,
                         double cutoff);

struct PredictorResult {
    std::string name;
    double mape = 0.0;
    KendallResult tau;
    std::vector<double> predictions;  // aligned with EvalReport::rows
};

struct EvalRow {
    std::string id;
    double measured = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // kept benchmarks with measurements, by id
    std::vector<PredictorResult> predictors;
    std::map<std::string, int> rejections;  // reason -> count
    int without_measurement = 0;
};

struct EvalOptions {
    SimMode mode = SimMode::loop;
    SimOptions sim;  // ablations, alignment, invariants
    // predictor specs: "uica", "baseline", "file:<path>"
    std::vector<std::string> predictors = {"uica", "baseline"};
};

EvalReport run_eval(const std::vector<BenchmarkRecord>& suite, const InstrTable& table,
                    const UarchConfig& config, const EvalOptions& options);

std::string render_report(const EvalReport& report);
std::string render_heatmap(const HeatmapBins& bins);

// "id value" per line; used for external predictor adapters.
std::map<std::string, double> load_prediction_file(const std::string& path);

}  // namespace uica
