#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "lnbal/forest.hpp"
#include "lnbal/graph.hpp"
#include "lnbal/spectral.hpp"

namespace lnbal {

enum class EstimatorKind {
    EqualSplit,
    LocalMaxHtlc,
    RandomEdge,
    NodeWise,
    EdgeWise,
    Concatenated,
    Shallow,
    Joint,
};

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);
bool is_forest_kind(EstimatorKind kind);

// One of the eight estimators: two heuristics without payload, six forest
// variants carrying a trained model (plus positional encodings when needed).
struct Estimator {
    EstimatorKind kind = EstimatorKind::EqualSplit;
    std::optional<RandomForestModel> forest;
    std::optional<PositionalTable> encodings;
    std::uint64_t feature_seed = 0;  // seeds the random-edge feature stream
    bool include_disabled = false;

    // nullopt = undefined (missing policy / unknown node), distinct from 0.
    std::optional<double> predict_edge(const ChannelGraph& graph,
                                       const DirectedEdge& edge) const;
};

struct TrainOptions {
    ForestConfig forest;
    int k_pe = 16;
    std::uint64_t rng_seed = 0;
    bool include_disabled = false;
    // When set, only these channels contribute training rows.
    std::optional<std::set<std::string>> channel_filter;
};

// Fits one forest variant on the graph's labeled channels; builds positional
// encodings first when the variant needs them.
Estimator train_variant(EstimatorKind kind, const ChannelGraph& graph,
                        const TrainOptions& options);

// Estimator bundle file: forest model + encodings + metadata, one JSON doc.
void save_estimator(const Estimator& est, const std::string& path);
Estimator load_estimator(const std::string& path);

}  // namespace lnbal
