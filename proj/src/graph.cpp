#include "lnbal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lnbal/util.hpp"

namespace lnbal {

using nlohmann::json;

bool valid_node_id(const NodeId& id) {
    if (id.size() != 66) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

void ChannelGraph::add_node(NodeInfo info) {
    if (!valid_node_id(info.id)) throw DataError("invalid node id: " + info.id);
    for (int bit : info.feature_bits)
        if (bit < 0 || bit >= 1024)
            throw DataError("feature bit out of range on node " + info.id);
    NodeId id = info.id;
    if (!nodes_.emplace(id, std::move(info)).second)
        throw DataError("duplicate node: " + id);
    adjacency_.emplace(id, std::vector<DirectedEdge>{});
}

void ChannelGraph::add_channel(Channel ch) {
    if (ch.node_a == ch.node_b)
        throw DataError("self-loop channel: " + ch.channel_id);
    if (ch.capacity_sat <= 0)
        throw DataError("non-positive capacity on channel: " + ch.channel_id);
    if (ch.node_a > ch.node_b) {
        std::swap(ch.node_a, ch.node_b);
        std::swap(ch.policy_a_to_b, ch.policy_b_to_a);
    }
    if (!has_node(ch.node_a) || !has_node(ch.node_b))
        throw DataError("channel references unknown node: " + ch.channel_id);
    for (const auto& pol : {ch.policy_a_to_b, ch.policy_b_to_a}) {
        if (!pol) continue;
        if (pol->min_htlc_msat > 0 && pol->max_htlc_msat > 0 &&
            pol->min_htlc_msat > pol->max_htlc_msat)
            throw DataError("min_htlc > max_htlc on channel: " + ch.channel_id);
    }
    const std::string id = ch.channel_id;
    const NodeId a = ch.node_a, b = ch.node_b;
    const std::int64_t cap = ch.capacity_sat;
    if (!channels_.emplace(id, std::move(ch)).second)
        throw DataError("duplicate channel_id: " + id);
    adjacency_[a].push_back({a, b, id});
    adjacency_[b].push_back({b, a, id});
    total_capacity_sat_ += cap;
}

void ChannelGraph::add_label(const DirectedEdge& edge, std::int64_t y_sat) {
    auto it = channels_.find(edge.channel_id);
    if (it == channels_.end())
        throw DataError("label references unknown channel: " + edge.channel_id);
    const Channel& ch = it->second;
    if (edge.src != ch.node_a && edge.src != ch.node_b)
        throw DataError("label src " + edge.src + " is not an endpoint of channel " +
                        edge.channel_id);
    DirectedEdge canon{edge.src, edge.src == ch.node_a ? ch.node_b : ch.node_a,
                       edge.channel_id};
    if (y_sat < 0 || y_sat > ch.capacity_sat)
        throw DataError("label balance out of [0, capacity] on channel " +
                        edge.channel_id);
    auto existing = labels_.find(canon);
    if (existing != labels_.end()) {
        if (existing->second.y_sat != y_sat)
            throw DataError("conflicting duplicate label on channel " + edge.channel_id);
        return;
    }
    // Both directions labeled must sum to capacity.
    DirectedEdge reverse{canon.dst, canon.src, canon.channel_id};
    auto rev = labels_.find(reverse);
    if (rev != labels_.end() && rev->second.y_sat + y_sat != ch.capacity_sat)
        throw DataError("labels on both directions of channel " + edge.channel_id +
                        " do not sum to capacity");
    BalanceLabel label;
    label.edge = canon;
    label.y_sat = y_sat;
    label.p = static_cast<double>(y_sat) / static_cast<double>(ch.capacity_sat);
    labels_.emplace(canon, label);
}

const Channel& ChannelGraph::channel(const std::string& channel_id) const {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) throw DataError("unknown channel: " + channel_id);
    return it->second;
}

const std::vector<DirectedEdge>& ChannelGraph::adjacency(const NodeId& node) const {
    auto it = adjacency_.find(node);
    if (it == adjacency_.end()) throw DataError("unknown node: " + node);
    return it->second;
}

const std::optional<ChannelPolicy>& ChannelGraph::policy(const DirectedEdge& edge) const {
    const Channel& ch = channel(edge.channel_id);
    if (edge.src == ch.node_a) return ch.policy_a_to_b;
    if (edge.src == ch.node_b) return ch.policy_b_to_a;
    throw DataError("edge src not on channel " + edge.channel_id);
}

const BalanceLabel* ChannelGraph::label(const DirectedEdge& edge) const {
    auto it = labels_.find(edge);
    return it == labels_.end() ? nullptr : &it->second;
}

std::vector<DirectedEdge> ChannelGraph::all_edges() const {
    std::vector<DirectedEdge> out;
    out.reserve(channels_.size() * 2);
    for (const auto& [id, ch] : channels_) {
        out.push_back({ch.node_a, ch.node_b, id});
        out.push_back({ch.node_b, ch.node_a, id});
    }
    return out;
}

double ChannelGraph::capacity_centrality(const NodeId& node) const {
    auto it = adjacency_.find(node);
    if (it == adjacency_.end()) throw DataError("unknown node: " + node);
    if (total_capacity_sat_ == 0) return 0.0;
    std::int64_t incident = 0;
    for (const DirectedEdge& e : it->second)
        incident += channel(e.channel_id).capacity_sat;
    return static_cast<double>(incident) / static_cast<double>(total_capacity_sat_);
}

namespace {

std::int64_t parse_amount(const json& j, const std::string& context) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_string()) {
        try {
            return std::stoll(j.get<std::string>());
        } catch (const std::exception&) {
            throw DataError("bad amount \"" + j.get<std::string>() + "\" in " + context);
        }
    }
    throw DataError("bad amount type in " + context);
}

ChannelPolicy parse_policy(const json& j, const std::string& context) {
    ChannelPolicy p;
    p.time_lock_delta = j.value("time_lock_delta", 0);
    if (j.contains("min_htlc")) p.min_htlc_msat = parse_amount(j.at("min_htlc"), context);
    if (j.contains("max_htlc_msat"))
        p.max_htlc_msat = parse_amount(j.at("max_htlc_msat"), context);
    if (j.contains("fee_base_msat"))
        p.fee_base_msat = parse_amount(j.at("fee_base_msat"), context);
    if (j.contains("fee_rate_milli_msat"))
        p.fee_rate_ppm = parse_amount(j.at("fee_rate_milli_msat"), context);
    p.disabled = j.value("disabled", false);
    if (p.time_lock_delta < 0 || p.min_htlc_msat < 0 || p.max_htlc_msat < 0 ||
        p.fee_base_msat < 0 || p.fee_rate_ppm < 0)
        throw DataError("negative policy field in " + context);
    return p;
}

json policy_to_json(const ChannelPolicy& p) {
    return json{{"time_lock_delta", p.time_lock_delta},
                {"min_htlc", std::to_string(p.min_htlc_msat)},
                {"max_htlc_msat", std::to_string(p.max_htlc_msat)},
                {"fee_base_msat", std::to_string(p.fee_base_msat)},
                {"fee_rate_milli_msat", std::to_string(p.fee_rate_ppm)},
                {"disabled", p.disabled}};
}

}  // namespace

ChannelGraph snapshot_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("snapshot parse failure: ") + e.what());
    }
    ChannelGraph g;
    try {
        for (const json& jn : doc.at("nodes")) {
            NodeInfo info;
            info.id = jn.at("pub_key").get<std::string>();
            info.alias = jn.value("alias", "");
            if (jn.contains("features")) {
                for (const auto& [bit, feat] : jn.at("features").items()) {
                    if (feat.value("is_known", false))
                        info.feature_bits.insert(std::stoi(bit));
                }
            }
            g.add_node(std::move(info));
        }
        for (const json& je : doc.at("edges")) {
            Channel ch;
            ch.channel_id = je.at("channel_id").get<std::string>();
            ch.capacity_sat = parse_amount(je.at("capacity"), "channel " + ch.channel_id);
            ch.node_a = je.at("node1_pub").get<std::string>();
            ch.node_b = je.at("node2_pub").get<std::string>();
            if (je.contains("node1_policy") && !je.at("node1_policy").is_null())
                ch.policy_a_to_b =
                    parse_policy(je.at("node1_policy"), "channel " + ch.channel_id);
            if (je.contains("node2_policy") && !je.at("node2_policy").is_null())
                ch.policy_b_to_a =
                    parse_policy(je.at("node2_policy"), "channel " + ch.channel_id);
            // add_channel re-canonicalizes if node1 > node2.
            g.add_channel(std::move(ch));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("snapshot schema error: ") + e.what());
    }
    return g;
}

ChannelGraph load_snapshot(const std::string& path) {
    return snapshot_from_json(read_file(path));
}

std::string snapshot_to_json(const ChannelGraph& graph) {
    json nodes = json::array();
    for (const auto& [id, info] : graph.nodes()) {
        json feats = json::object();
        for (int bit : info.feature_bits)
            feats[std::to_string(bit)] = json{{"is_known", true}};
        nodes.push_back(json{{"pub_key", id}, {"alias", info.alias}, {"features", feats}});
    }
    json edges = json::array();
    for (const auto& [id, ch] : graph.channels()) {
        json je{{"channel_id", id},
                {"capacity", std::to_string(ch.capacity_sat)},
                {"node1_pub", ch.node_a},
                {"node2_pub", ch.node_b}};
        je["node1_policy"] = ch.policy_a_to_b ? policy_to_json(*ch.policy_a_to_b) : json();
        je["node2_policy"] = ch.policy_b_to_a ? policy_to_json(*ch.policy_b_to_a) : json();
        edges.push_back(std::move(je));
    }
    return json{{"nodes", nodes}, {"edges", edges}}.dump(2) + "\n";
}

void save_snapshot(const ChannelGraph& graph, const std::string& path) {
    write_file(path, snapshot_to_json(graph));
}

void load_labels(ChannelGraph& graph, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open labels file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty labels file: " + path);
    if (split_csv_line(line) != std::vector<std::string>{"channel_id", "src_pub", "y_sat"})
        throw DataError("labels file missing header channel_id,src_pub,y_sat: " + path);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw DataError("labels line " + std::to_string(lineno) + ": expected 3 fields");
        std::int64_t y;
        try {
            y = std::stoll(fields[2]);
        } catch (const std::exception&) {
            throw DataError("labels line " + std::to_string(lineno) + ": bad y_sat");
        }
        graph.add_label({fields[1], "", fields[0]}, y);
    }
}

void save_labels(const ChannelGraph& graph, const std::string& path) {
    std::string out = "channel_id,src_pub,y_sat\n";
    for (const auto& [edge, label] : graph.labels()) {
        out += edge.channel_id + "," + edge.src + "," + std::to_string(label.y_sat) + "\n";
    }
    write_file(path, out);
}

}  // namespace lnbal
