#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lnbal/models.hpp"

namespace lnbal {

struct SplitSpec {
    double test_fraction = 0.10;
    double val_fraction = 0.10;
    std::uint64_t rng_seed = 0;
};

// Channel-level folds: both directions of a channel share a fold.
struct Folds {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

Folds split(const std::vector<std::string>& channel_ids, const SplitSpec& spec);

struct Prediction {
    double p_hat = 0.0;
    double p = 0.0;
    std::int64_t capacity_sat = 0;
};

struct Metrics {
    double mae_p = 0.0;
    double mae_y_sat = 0.0;
    double r = 0.0;
    bool r_defined = false;  // false when either side is constant
    double r2 = 0.0;
    bool r2_defined = false;  // false when actuals are constant
};

Metrics compute_metrics(const std::vector<Prediction>& predictions);

struct FeatureCorrelation {
    std::string name;
    double r = 0.0;
    bool defined = false;  // false for constant features
};

// Pearson r of each schema feature against the target; returns |r| > threshold
// sorted by |r| descending.
std::vector<FeatureCorrelation> correlation_screen(const std::vector<FeatureRow>& rows,
                                                   const FeatureSchema& schema,
                                                   double threshold = 0.1);

// counts[actual][predicted], index 0 = p <= 0.5, 1 = p > 0.5.
using ConfusionCounts = std::array<std::array<std::size_t, 2>, 2>;
ConfusionCounts confusion_at_half(const std::vector<Prediction>& predictions);

struct EvalReport {
    EstimatorKind kind;
    Metrics metrics;
    std::size_t n_test = 0;
    ConfusionCounts confusion{};
    std::vector<std::pair<std::string, double>> mdi;  // forest variants only
    double antisymmetry_gap = 0.0;  // mean |p_hat(u,v) + p_hat(v,u) - 1| over test
};

struct BenchmarkConfig {
    SplitSpec split_spec;
    ForestConfig forest;
    int k_pe = 16;
    std::uint64_t rng_seed = 0;
    bool include_disabled = false;
    bool tune = false;  // grid-select min_samples_leaf on the validation fold
};

// Trains all six forest variants on the train fold and evaluates all eight
// estimators on the test fold. When out_dir is non-empty, writes results.csv,
// results.txt, histogram.csv, scatter.csv, mdi.csv and confusion.csv there.
std::vector<EvalReport> run_benchmark(const ChannelGraph& graph,
                                      const BenchmarkConfig& config,
                                      const std::string& out_dir = "");

// Labeled featurizable channel ids, sorted.
std::vector<std::string> labeled_channels(const ChannelGraph& graph,
                                          bool include_disabled = false);

std::string render_table(const std::vector<EvalReport>& reports);

}  // namespace lnbal
