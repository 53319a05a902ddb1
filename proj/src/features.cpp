#include "lnbal/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <random>

#include <json.hpp>

#include "lnbal/util.hpp"

namespace lnbal {

using nlohmann::json;

Variant variant_from_string(const std::string& name) {
    if (name == "random-edge") return Variant::RandomEdge;
    if (name == "node-wise") return Variant::NodeWise;
    if (name == "edge-wise") return Variant::EdgeWise;
    if (name == "concatenated") return Variant::Concatenated;
    if (name == "shallow") return Variant::Shallow;
    if (name == "joint") return Variant::Joint;
    throw UsageError("unknown variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::RandomEdge: return "random-edge";
        case Variant::NodeWise: return "node-wise";
        case Variant::EdgeWise: return "edge-wise";
        case Variant::Concatenated: return "concatenated";
        case Variant::Shallow: return "shallow";
        case Variant::Joint: return "joint";
    }
    throw InternalError("bad variant enum");
}

std::uint64_t FeatureSchema::hash() const {
    std::uint64_t h = fnv1a(to_string(variant));
    for (const auto& [name, src] : columns) {
        h = fnv1a(name, h);
        h = fnv1a(std::string(1, static_cast<char>('0' + static_cast<int>(src))), h);
    }
    return h;
}

namespace {

const char* source_name(FeatureSource s) {
    switch (s) {
        case FeatureSource::NodeLocal: return "node-local";
        case FeatureSource::NodeRemote: return "node-remote";
        case FeatureSource::Edge: return "edge";
        case FeatureSource::Positional: return "positional";
        case FeatureSource::Random: return "random";
    }
    throw InternalError("bad feature source enum");
}

FeatureSource source_from_name(const std::string& s) {
    if (s == "node-local") return FeatureSource::NodeLocal;
    if (s == "node-remote") return FeatureSource::NodeRemote;
    if (s == "edge") return FeatureSource::Edge;
    if (s == "positional") return FeatureSource::Positional;
    if (s == "random") return FeatureSource::Random;
    throw DataError("bad feature source: " + s);
}

void add_node_block(FeatureSchema& schema, const std::string& prefix,
                    FeatureSource source) {
    for (int bit : schema.feature_bit_vocabulary)
        schema.columns.emplace_back(prefix + "feat_" + std::to_string(bit) + ".is_known",
                                    source);
    schema.columns.emplace_back(prefix + "capacity_centrality", source);
    schema.columns.emplace_back(prefix + "fee_ratio", source);
}

void add_pe_block(FeatureSchema& schema, const std::string& prefix, int k_pe) {
    for (int i = 0; i < k_pe; ++i)
        schema.columns.emplace_back(prefix + "pe_" + std::to_string(i),
                                    FeatureSource::Positional);
}

void add_edge_block(FeatureSchema& schema) {
    schema.columns.emplace_back("time_lock_delta", FeatureSource::Edge);
    schema.columns.emplace_back("log_min_htlc_msat", FeatureSource::Edge);
    schema.columns.emplace_back("max_htlc_fraction", FeatureSource::Edge);
    schema.columns.emplace_back("log_fee_rate_ppm", FeatureSource::Edge);
    schema.columns.emplace_back("log_fee_base_msat", FeatureSource::Edge);
}

}  // namespace

FeatureSchema build_schema(const ChannelGraph& graph, Variant variant, int k_pe) {
    FeatureSchema schema;
    schema.variant = variant;
    std::set<int> bits;
    for (const auto& [id, info] : graph.nodes())
        bits.insert(info.feature_bits.begin(), info.feature_bits.end());
    schema.feature_bit_vocabulary.assign(bits.begin(), bits.end());

    switch (variant) {
        case Variant::RandomEdge:
            schema.k_random = kRandomDim;
            for (int i = 0; i < kRandomDim; ++i)
                schema.columns.emplace_back("rand_" + std::to_string(i),
                                            FeatureSource::Random);
            break;
        case Variant::NodeWise:
            add_node_block(schema, "local_", FeatureSource::NodeLocal);
            break;
        case Variant::EdgeWise:
            add_edge_block(schema);
            break;
        case Variant::Concatenated:
            add_node_block(schema, "local_", FeatureSource::NodeLocal);
            add_node_block(schema, "remote_", FeatureSource::NodeRemote);
            add_edge_block(schema);
            break;
        case Variant::Shallow:
            if (k_pe < 1) throw UsageError("shallow variant requires k_pe >= 1");
            schema.k_pe = k_pe;
            add_pe_block(schema, "local_", k_pe);
            add_pe_block(schema, "remote_", k_pe);
            break;
        case Variant::Joint:
            if (k_pe < 1) throw UsageError("joint variant requires k_pe >= 1");
            schema.k_pe = k_pe;
            add_node_block(schema, "local_", FeatureSource::NodeLocal);
            add_pe_block(schema, "local_", k_pe);
            add_node_block(schema, "remote_", FeatureSource::NodeRemote);
            add_pe_block(schema, "remote_", k_pe);
            add_edge_block(schema);
            break;
    }
    return schema;
}

std::vector<double> node_features(const ChannelGraph& graph, const NodeId& node,
                                  const FeatureSchema& schema) {
    if (!graph.has_node(node)) throw DataError("unknown node: " + node);
    const NodeInfo& info = graph.nodes().at(node);
    std::vector<double> out;
    out.reserve(schema.feature_bit_vocabulary.size() + 2);
    for (int bit : schema.feature_bit_vocabulary)
        out.push_back(info.feature_bits.count(bit) ? 1.0 : 0.0);
    out.push_back(graph.capacity_centrality(node));

    double in_sum = 0.0, out_sum = 0.0;
    int in_count = 0, out_count = 0;
    for (const DirectedEdge& e : graph.adjacency(node)) {
        const auto& outgoing = graph.policy(e);
        if (outgoing && !outgoing->disabled) {
            out_sum += static_cast<double>(outgoing->fee_rate_ppm);
            ++out_count;
        }
        const auto& incoming = graph.policy({e.dst, e.src, e.channel_id});
        if (incoming && !incoming->disabled) {
            in_sum += static_cast<double>(incoming->fee_rate_ppm);
            ++in_count;
        }
    }
    double in_mean = in_count ? in_sum / in_count : 0.0;
    double out_mean = out_count ? out_sum / out_count : 0.0;
    double ratio;
    if (out_mean == 0.0)
        ratio = in_mean == 0.0 ? 1.0 : kRatioCap;
    else
        ratio = std::min(in_mean / out_mean, kRatioCap);
    out.push_back(ratio);
    return out;
}

std::vector<double> edge_features(const ChannelGraph& graph, const DirectedEdge& edge) {
    const auto& pol = graph.policy(edge);
    if (!pol) throw DataError("edge_features: missing policy on channel " + edge.channel_id);
    const Channel& ch = graph.channel(edge.channel_id);
    double cap_msat = static_cast<double>(ch.capacity_sat) * 1000.0;
    return {static_cast<double>(pol->time_lock_delta),
            std::log10(1.0 + static_cast<double>(pol->min_htlc_msat)),
            std::min(1.0, static_cast<double>(pol->max_htlc_msat) / cap_msat),
            std::log10(1.0 + static_cast<double>(pol->fee_rate_ppm)),
            std::log10(1.0 + static_cast<double>(pol->fee_base_msat))};
}

bool featurizable(const ChannelGraph&, const Channel& ch, bool include_disabled) {
    if (!ch.policy_a_to_b || !ch.policy_b_to_a) return false;
    if (!include_disabled && (ch.policy_a_to_b->disabled || ch.policy_b_to_a->disabled))
        return false;
    return true;
}

namespace {

std::vector<double> random_edge_features(const DirectedEdge& edge, int dim,
                                         std::uint64_t rng_seed) {
    std::mt19937_64 rng(fnv1a(edge.channel_id + "|" + edge.src) ^ rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> out(dim);
    for (double& v : out) v = gauss(rng);
    return out;
}

struct RowBuilder {
    const ChannelGraph& graph;
    const FeatureSchema& schema;
    const PositionalTable* encodings;
    std::uint64_t rng_seed;
    std::map<NodeId, std::vector<double>> node_cache;

    const std::vector<double>& node_vec(const NodeId& id) {
        auto it = node_cache.find(id);
        if (it == node_cache.end())
            it = node_cache.emplace(id, node_features(graph, id, schema)).first;
        return it->second;
    }

    const std::vector<double>& pe_vec(const NodeId& id) {
        if (!encodings)
            throw UsageError("variant requires positional encodings");
        auto it = encodings->vectors.find(id);
        if (it == encodings->vectors.end())
            throw DataError("no positional encoding for node " + id);
        return it->second;
    }

    std::vector<double> assemble(const DirectedEdge& edge) {
        std::vector<double> row;
        row.reserve(schema.width());
        auto append = [&row](const std::vector<double>& v) {
            row.insert(row.end(), v.begin(), v.end());
        };
        switch (schema.variant) {
            case Variant::RandomEdge:
                append(random_edge_features(edge, schema.k_random, rng_seed));
                break;
            case Variant::NodeWise:
                append(node_vec(edge.src));
                break;
            case Variant::EdgeWise:
                append(edge_features(graph, edge));
                break;
            case Variant::Concatenated:
                append(node_vec(edge.src));
                append(node_vec(edge.dst));
                append(edge_features(graph, edge));
                break;
            case Variant::Shallow:
                append(pe_vec(edge.src));
                append(pe_vec(edge.dst));
                break;
            case Variant::Joint:
                append(node_vec(edge.src));
                append(pe_vec(edge.src));
                append(node_vec(edge.dst));
                append(pe_vec(edge.dst));
                append(edge_features(graph, edge));
                break;
        }
        if (row.size() != schema.width())
            throw InternalError("feature row width mismatch");
        for (double v : row)
            if (std::isnan(v)) throw InternalError("NaN feature value");
        return row;
    }
};

}  // namespace

std::vector<FeatureRow> build_rows(const ChannelGraph& graph, const FeatureSchema& schema,
                                   const PositionalTable* encodings,
                                   std::uint64_t rng_seed, bool include_disabled,
                                   const std::set<std::string>* channel_filter) {
    RowBuilder builder{graph, schema, encodings, rng_seed, {}};
    std::vector<FeatureRow> rows;
    for (const auto& [cid, ch] : graph.channels()) {
        if (channel_filter && !channel_filter->count(cid)) continue;
        if (!featurizable(graph, ch, include_disabled)) continue;
        DirectedEdge forward{ch.node_a, ch.node_b, cid};
        DirectedEdge backward{ch.node_b, ch.node_a, cid};
        const BalanceLabel* fl = graph.label(forward);
        const BalanceLabel* bl = graph.label(backward);
        if (!fl && !bl) continue;
        double p_forward = fl ? fl->p : 1.0 - bl->p;
        rows.push_back({forward, builder.assemble(forward), p_forward});
        rows.push_back({backward, builder.assemble(backward), 1.0 - p_forward});
    }
    return rows;
}

std::optional<FeatureRow> build_row(const ChannelGraph& graph, const DirectedEdge& edge,
                                    const FeatureSchema& schema,
                                    const PositionalTable* encodings,
                                    std::uint64_t rng_seed, bool include_disabled) {
    const Channel& ch = graph.channel(edge.channel_id);
    if (!featurizable(graph, ch, include_disabled)) return std::nullopt;
    RowBuilder builder{graph, schema, encodings, rng_seed, {}};
    if ((schema.variant == Variant::Shallow || schema.variant == Variant::Joint) &&
        (!encodings || !encodings->vectors.count(edge.src) ||
         !encodings->vectors.count(edge.dst)))
        return std::nullopt;
    return FeatureRow{edge, builder.assemble(edge), std::nullopt};
}

void save_matrix(const std::vector<FeatureRow>& rows, const FeatureSchema& schema,
                 const std::string& path) {
    std::string out = "channel_id,src_pub";
    for (const auto& [name, src] : schema.columns) out += "," + name;
    out += ",target_p\n";
    for (const FeatureRow& row : rows) {
        out += row.edge.channel_id + "," + row.edge.src;
        for (double v : row.values) out += "," + format_double(v);
        out += ",";
        out += row.target_p ? format_double(*row.target_p) : "";
        out += "\n";
    }
    write_file(path, out);
}

std::string schema_to_json(const FeatureSchema& schema) {
    json cols = json::array();
    for (const auto& [name, src] : schema.columns)
        cols.push_back(json{{"name", name}, {"source", source_name(src)}});
    json doc{{"version", 1},
             {"variant", to_string(schema.variant)},
             {"k_pe", schema.k_pe},
             {"k_random", schema.k_random},
             {"feature_bit_vocabulary", schema.feature_bit_vocabulary},
             {"columns", cols}};
    return doc.dump(2) + "\n";
}

FeatureSchema schema_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("schema parse failure: ") + e.what());
    }
    FeatureSchema schema;
    try {
        schema.variant = variant_from_string(doc.at("variant").get<std::string>());
        schema.k_pe = doc.at("k_pe").get<int>();
        schema.k_random = doc.at("k_random").get<int>();
        schema.feature_bit_vocabulary =
            doc.at("feature_bit_vocabulary").get<std::vector<int>>();
        for (const json& col : doc.at("columns"))
            schema.columns.emplace_back(col.at("name").get<std::string>(),
                                        source_from_name(col.at("source").get<std::string>()));
    } catch (const json::exception& e) {
        throw DataError(std::string("schema content error: ") + e.what());
    }
    return schema;
}

}  // namespace lnbal
