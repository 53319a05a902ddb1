#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lnbal/graph.hpp"
#include "lnbal/spectral.hpp"

namespace lnbal {

enum class FeatureSource { NodeLocal, NodeRemote, Edge, Positional, Random };

enum class Variant { RandomEdge, NodeWise, EdgeWise, Concatenated, Shallow, Joint };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

struct FeatureSchema {
    std::vector<std::pair<std::string, FeatureSource>> columns;
    std::vector<int> feature_bit_vocabulary;  // sorted bits seen in training graph
    Variant variant = Variant::Joint;
    int k_pe = 0;      // positional dims per node (Shallow/Joint)
    int k_random = 0;  // random dims (RandomEdge)

    std::size_t width() const { return columns.size(); }
    std::uint64_t hash() const;
};

struct FeatureRow {
    DirectedEdge edge;
    std::vector<double> values;
    std::optional<double> target_p;
};

// Cap for fee ratios with a zero denominator.
constexpr double kRatioCap = 100.0;
constexpr int kRandomDim = 8;

// Schema for a variant, with the feature-bit vocabulary frozen from `graph`.
FeatureSchema build_schema(const ChannelGraph& graph, Variant variant, int k_pe);

// [bit indicators over vocabulary] ++ [capacity_centrality] ++ [fee_ratio],
// fee_ratio = mean incoming fee_rate_ppm / mean outgoing (drain), 0/0 -> 1,
// x/0 capped at kRatioCap. Only enabled policies participate.
std::vector<double> node_features(const ChannelGraph& graph, const NodeId& node,
                                  const FeatureSchema& schema);

// [time_lock_delta, log10(1+min_htlc_msat), max_htlc_fraction,
//  log10(1+fee_rate_ppm), log10(1+fee_base_msat)]; requires a policy.
std::vector<double> edge_features(const ChannelGraph& graph, const DirectedEdge& edge);

// True when both directions carry enabled policies (rows are only built for
// such channels, keeping augmentation symmetric).
bool featurizable(const ChannelGraph& graph, const Channel& ch,
                  bool include_disabled = false);

// Augmented rows: for every labeled featurizable channel, both direction rows
// with targets p and 1-p. Deterministic given rng_seed. channel_filter, when
// set, restricts rows to those channel ids (fold training without leakage).
std::vector<FeatureRow> build_rows(const ChannelGraph& graph,
                                   const FeatureSchema& schema,
                                   const PositionalTable* encodings,
                                   std::uint64_t rng_seed,
                                   bool include_disabled = false,
                                   const std::set<std::string>* channel_filter = nullptr);

// Inference-time row for one directed edge (no target). Returns nullopt when
// the channel is not featurizable or a needed encoding is missing.
std::optional<FeatureRow> build_row(const ChannelGraph& graph, const DirectedEdge& edge,
                                    const FeatureSchema& schema,
                                    const PositionalTable* encodings,
                                    std::uint64_t rng_seed,
                                    bool include_disabled = false);

// Design-matrix CSV with schema header row; schema sidecar as JSON.
void save_matrix(const std::vector<FeatureRow>& rows, const FeatureSchema& schema,
                 const std::string& path);
std::string schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const std::string& text);

}  // namespace lnbal
