#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lnbal/errors.hpp"

namespace lnbal {

// 33-byte public key as 66-char lowercase hex.
using NodeId = std::string;

bool valid_node_id(const NodeId& id);

struct NodeInfo {
    NodeId id;
    std::set<int> feature_bits;  // announced feature flags, each < 1024
    std::string alias;
};

struct ChannelPolicy {
    int time_lock_delta = 0;
    std::int64_t min_htlc_msat = 0;
    std::int64_t max_htlc_msat = 0;
    std::int64_t fee_base_msat = 0;
    std::int64_t fee_rate_ppm = 0;
    bool disabled = false;
};

// One physical channel, stored once with node_a < node_b.
struct Channel {
    std::string channel_id;
    NodeId node_a;
    NodeId node_b;
    std::int64_t capacity_sat = 0;
    std::optional<ChannelPolicy> policy_a_to_b;
    std::optional<ChannelPolicy> policy_b_to_a;
};

struct DirectedEdge {
    NodeId src;
    NodeId dst;
    std::string channel_id;

    auto operator<=>(const DirectedEdge&) const = default;
};

struct BalanceLabel {
    DirectedEdge edge;
    std::int64_t y_sat = 0;  // observed local balance
    double p = 0.0;          // y_sat / capacity_sat
};

class ChannelGraph {
public:
    void add_node(NodeInfo info);
    void add_channel(Channel ch);  // endpoints reordered to canonical form
    void add_label(const DirectedEdge& edge, std::int64_t y_sat);

    const std::map<NodeId, NodeInfo>& nodes() const { return nodes_; }
    const std::map<std::string, Channel>& channels() const { return channels_; }
    const std::map<DirectedEdge, BalanceLabel>& labels() const { return labels_; }

    bool has_node(const NodeId& id) const { return nodes_.count(id) != 0; }
    const Channel& channel(const std::string& channel_id) const;
    const std::vector<DirectedEdge>& adjacency(const NodeId& node) const;

    // Policy governing traffic src -> dst on the edge's channel.
    const std::optional<ChannelPolicy>& policy(const DirectedEdge& edge) const;
    const BalanceLabel* label(const DirectedEdge& edge) const;

    // All directed edges, ordered by (channel_id, src).
    std::vector<DirectedEdge> all_edges() const;

    std::int64_t total_capacity_sat() const { return total_capacity_sat_; }
    double capacity_centrality(const NodeId& node) const;

private:
    std::map<NodeId, NodeInfo> nodes_;
    std::map<std::string, Channel> channels_;
    std::map<NodeId, std::vector<DirectedEdge>> adjacency_;
    std::map<DirectedEdge, BalanceLabel> labels_;
    std::int64_t total_capacity_sat_ = 0;
};

// Snapshot JSON: top-level "nodes" and "edges" arrays in the de-facto
// describegraph layout, so real node-software dumps load unmodified.
ChannelGraph load_snapshot(const std::string& path);
void save_snapshot(const ChannelGraph& graph, const std::string& path);
std::string snapshot_to_json(const ChannelGraph& graph);
ChannelGraph snapshot_from_json(const std::string& text);

// Labels CSV: header `channel_id,src_pub,y_sat`, one row per observed direction.
void load_labels(ChannelGraph& graph, const std::string& path);
void save_labels(const ChannelGraph& graph, const std::string& path);

}  // namespace lnbal
