#include "lnbal/models.hpp"

#include <json.hpp>

#include "lnbal/util.hpp"

namespace lnbal {

using nlohmann::json;

EstimatorKind estimator_kind_from_string(const std::string& name) {
    if (name == "equal-split") return EstimatorKind::EqualSplit;
    if (name == "local-max-htlc") return EstimatorKind::LocalMaxHtlc;
    if (name == "random-edge") return EstimatorKind::RandomEdge;
    if (name == "node-wise") return EstimatorKind::NodeWise;
    if (name == "edge-wise") return EstimatorKind::EdgeWise;
    if (name == "concatenated") return EstimatorKind::Concatenated;
    if (name == "shallow") return EstimatorKind::Shallow;
    if (name == "joint") return EstimatorKind::Joint;
    throw UsageError("unknown estimator kind: " + name);
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::EqualSplit: return "equal-split";
        case EstimatorKind::LocalMaxHtlc: return "local-max-htlc";
        case EstimatorKind::RandomEdge: return "random-edge";
        case EstimatorKind::NodeWise: return "node-wise";
        case EstimatorKind::EdgeWise: return "edge-wise";
        case EstimatorKind::Concatenated: return "concatenated";
        case EstimatorKind::Shallow: return "shallow";
        case EstimatorKind::Joint: return "joint";
    }
    throw InternalError("bad estimator kind enum");
}

bool is_forest_kind(EstimatorKind kind) {
    return kind != EstimatorKind::EqualSplit && kind != EstimatorKind::LocalMaxHtlc;
}

namespace {

Variant variant_for(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::RandomEdge: return Variant::RandomEdge;
        case EstimatorKind::NodeWise: return Variant::NodeWise;
        case EstimatorKind::EdgeWise: return Variant::EdgeWise;
        case EstimatorKind::Concatenated: return Variant::Concatenated;
        case EstimatorKind::Shallow: return Variant::Shallow;
        case EstimatorKind::Joint: return Variant::Joint;
        default: throw UsageError("not a forest variant: " + to_string(kind));
    }
}

}  // namespace

std::optional<double> Estimator::predict_edge(const ChannelGraph& graph,
                                              const DirectedEdge& edge) const {
    switch (kind) {
        case EstimatorKind::EqualSplit:
            return 0.5;
        case EstimatorKind::LocalMaxHtlc: {
            const auto& pol = graph.policy(edge);
            if (!pol || (!include_disabled && pol->disabled)) return std::nullopt;
            double cap_msat =
                static_cast<double>(graph.channel(edge.channel_id).capacity_sat) * 1000.0;
            return std::min(1.0, static_cast<double>(pol->max_htlc_msat) / cap_msat);
        }
        default: {
            if (!forest) throw InternalError("forest estimator without model payload");
            auto row = build_row(graph, edge, forest->schema,
                                 encodings ? &*encodings : nullptr, feature_seed,
                                 include_disabled);
            if (!row) return std::nullopt;
            return forest->predict(row->values);
        }
    }
}

Estimator train_variant(EstimatorKind kind, const ChannelGraph& graph,
                        const TrainOptions& options) {
    Variant variant = variant_for(kind);

    std::size_t labeled_channels = 0;
    for (const auto& [cid, ch] : graph.channels()) {
        if (options.channel_filter && !options.channel_filter->count(cid)) continue;
        if (!featurizable(graph, ch, options.include_disabled)) continue;
        if (graph.label({ch.node_a, ch.node_b, cid}) ||
            graph.label({ch.node_b, ch.node_a, cid}))
            ++labeled_channels;
    }
    if (labeled_channels < 10)
        throw DataError("insufficient data: fewer than 10 labeled channels");

    Estimator est;
    est.kind = kind;
    est.include_disabled = options.include_disabled;
    est.feature_seed = derive_seed(options.rng_seed, "features");

    if (variant == Variant::Shallow || variant == Variant::Joint)
        est.encodings = laplacian_encodings(graph, options.k_pe,
                                            derive_seed(options.rng_seed, "spectral"));

    FeatureSchema schema = build_schema(graph, variant, options.k_pe);
    auto rows = build_rows(graph, schema, est.encodings ? &*est.encodings : nullptr,
                           est.feature_seed, options.include_disabled,
                           options.channel_filter ? &*options.channel_filter : nullptr);

    ForestConfig fc = options.forest;
    fc.rng_seed = derive_seed(options.rng_seed, "forest");
    est.forest = fit(rows, fc, schema);
    return est;
}

void save_estimator(const Estimator& est, const std::string& path) {
    json doc{{"format", "lnbal-estimator"},
             {"version", 1},
             {"kind", to_string(est.kind)},
             {"feature_seed", est.feature_seed},
             {"include_disabled", est.include_disabled}};
    doc["forest"] = est.forest ? json::parse(model_to_json(*est.forest)) : json();
    if (est.encodings) {
        json vectors = json::object();
        for (const auto& [id, vec] : est.encodings->vectors) vectors[id] = vec;
        doc["encodings"] = json{{"k", est.encodings->k},
                                {"eigenvalues", est.encodings->eigenvalues},
                                {"vectors", vectors}};
    } else {
        doc["encodings"] = json();
    }
    write_file(path, doc.dump() + "\n");
}

Estimator load_estimator(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(std::string("corrupt estimator file: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "lnbal-estimator")
            throw DataError("not an estimator file: " + path);
        if (doc.at("version").get<int>() != 1)
            throw DataError("unsupported estimator file version");
        Estimator est;
        est.kind = estimator_kind_from_string(doc.at("kind").get<std::string>());
        est.feature_seed = doc.at("feature_seed").get<std::uint64_t>();
        est.include_disabled = doc.at("include_disabled").get<bool>();
        if (!doc.at("forest").is_null())
            est.forest = model_from_json(doc.at("forest").dump());
        if (!doc.at("encodings").is_null()) {
            PositionalTable table;
            const json& enc = doc.at("encodings");
            table.k = enc.at("k").get<int>();
            table.eigenvalues = enc.at("eigenvalues").get<std::vector<double>>();
            for (const auto& [id, vec] : enc.at("vectors").items())
                table.vectors.emplace(id, vec.get<std::vector<double>>());
            est.encodings = std::move(table);
        }
        if (is_forest_kind(est.kind) && !est.forest)
            throw DataError("estimator file missing forest payload");
        return est;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt estimator file: ") + e.what());
    }
}

}  // namespace lnbal
