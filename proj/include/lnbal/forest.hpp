#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lnbal/features.hpp"

namespace lnbal {

enum class SplitFeatureRule { Third, Sqrt, All, Explicit };

struct ForestConfig {
    int n_trees = 200;
    std::optional<int> max_depth;
    int min_samples_leaf = 2;
    SplitFeatureRule feature_rule = SplitFeatureRule::Third;
    int features_per_split = 0;  // used when feature_rule == Explicit
    bool bootstrap = true;
    std::uint64_t rng_seed = 0;

    int resolve_mtry(int n_features) const;
};

// Flattened regression tree; feature[i] == -1 marks a leaf carrying value[i].
// Internal nodes route value <= threshold left, > threshold right.
struct Tree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    double predict(const std::vector<double>& row) const;
};

struct RandomForestModel {
    ForestConfig config;
    FeatureSchema schema;
    std::vector<Tree> trees;
    std::vector<double> mdi;  // non-negative, sums to 1

    double predict(const std::vector<double>& row) const;  // clamped to [0,1]
};

RandomForestModel fit(const std::vector<FeatureRow>& rows, const ForestConfig& config,
                      const FeatureSchema& schema);

void save_model(const RandomForestModel& model, const std::string& path);
std::string model_to_json(const RandomForestModel& model);
RandomForestModel load_model(const std::string& path);
RandomForestModel model_from_json(const std::string& text);

}  // namespace lnbal
