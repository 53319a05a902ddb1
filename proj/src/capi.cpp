#include "lnbalance.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "lnbal/datagen.hpp"
#include "lnbal/eval.hpp"
#include "lnbal/routing.hpp"
#include "lnbal/util.hpp"

using namespace lnbal;

struct lnb_graph_t {
    ChannelGraph graph;
};

struct lnb_estimator_t {
    Estimator estimator;
};

namespace {

thread_local std::string g_last_error;

lnb_status fail(lnb_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
lnb_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LNB_OK;
    } catch (const UsageError& e) {
        return fail(LNB_ERR_USAGE, e.what());
    } catch (const DataError& e) {
        return fail(LNB_ERR_DATA, e.what());
    } catch (const std::exception& e) {
        return fail(LNB_ERR_INTERNAL, e.what());
    }
}

lnb_status require(bool ok, const char* message) {
    return ok ? LNB_OK : fail(LNB_ERR_USAGE, message);
}

ForestConfig to_forest_config(const lnb_forest_params* p, std::uint64_t seed) {
    ForestConfig fc;
    if (p) {
        fc.n_trees = p->n_trees;
        if (p->max_depth > 0) fc.max_depth = p->max_depth;
        fc.min_samples_leaf = p->min_samples_leaf;
        if (p->features_per_split == 0)
            fc.feature_rule = SplitFeatureRule::Third;
        else if (p->features_per_split == -1)
            fc.feature_rule = SplitFeatureRule::Sqrt;
        else if (p->features_per_split == -2)
            fc.feature_rule = SplitFeatureRule::All;
        else {
            fc.feature_rule = SplitFeatureRule::Explicit;
            fc.features_per_split = p->features_per_split;
        }
        fc.bootstrap = p->bootstrap != 0;
    }
    fc.rng_seed = seed;
    return fc;
}

}  // namespace

extern "C" {

const char* lnb_version(void) { return "1.0.0"; }

const char* lnb_last_error(void) { return g_last_error.c_str(); }

void lnb_free_string(char* s) { delete[] s; }

lnb_status lnb_graph_open(const char* snapshot_path, lnb_graph** out) {
    if (lnb_status s = require(snapshot_path && out, "null argument")) return s;
    return guarded([&] {
        auto* g = new lnb_graph_t{load_snapshot(snapshot_path)};
        *out = g;
    });
}

lnb_status lnb_graph_load_labels(lnb_graph* graph, const char* labels_csv_path) {
    if (lnb_status s = require(graph && labels_csv_path, "null argument")) return s;
    return guarded([&] { load_labels(graph->graph, labels_csv_path); });
}

void lnb_graph_close(lnb_graph* graph) { delete graph; }

lnb_status lnb_graph_counts(const lnb_graph* graph, size_t* n_nodes,
                            size_t* n_channels, size_t* n_labels) {
    if (lnb_status s = require(graph != nullptr, "null graph")) return s;
    if (n_nodes) *n_nodes = graph->graph.nodes().size();
    if (n_channels) *n_channels = graph->graph.channels().size();
    if (n_labels) *n_labels = graph->graph.labels().size();
    return LNB_OK;
}

void lnb_synth_params_init(lnb_synth_params* params) {
    if (!params) return;
    SynthConfig d;
    params->n_nodes = d.n_nodes;
    params->attach_m = d.attach_m;
    params->capacity_log_mean = d.capacity_log_mean;
    params->capacity_log_sigma = d.capacity_log_sigma;
    params->depleted_fraction = d.depleted_fraction;
    params->signal_strength = d.signal_strength;
    params->rng_seed = d.rng_seed;
}

lnb_status lnb_synth(const lnb_synth_params* params, const char* snapshot_out,
                     const char* labels_out, const char* truth_out) {
    if (lnb_status s = require(params && snapshot_out, "null argument")) return s;
    return guarded([&] {
        SynthConfig cfg;
        cfg.n_nodes = params->n_nodes;
        cfg.attach_m = params->attach_m;
        cfg.capacity_log_mean = params->capacity_log_mean;
        cfg.capacity_log_sigma = params->capacity_log_sigma;
        cfg.depleted_fraction = params->depleted_fraction;
        cfg.signal_strength = params->signal_strength;
        cfg.rng_seed = params->rng_seed;
        ChannelGraph graph = generate_synthetic(cfg);
        save_snapshot(graph, snapshot_out);
        if (labels_out) save_labels(graph, labels_out);
        if (truth_out) save_ground_truth(graph, truth_out);
    });
}

void lnb_forest_params_init(lnb_forest_params* params) {
    if (!params) return;
    ForestConfig d;
    params->n_trees = d.n_trees;
    params->max_depth = 0;
    params->min_samples_leaf = d.min_samples_leaf;
    params->features_per_split = 0;
    params->bootstrap = d.bootstrap ? 1 : 0;
}

lnb_status lnb_train(const lnb_graph* graph, const char* variant,
                     const lnb_forest_params* forest, int k_pe, uint64_t seed,
                     const char* model_out) {
    if (lnb_status s = require(graph && variant && model_out, "null argument")) return s;
    return guarded([&] {
        EstimatorKind kind = estimator_kind_from_string(variant);
        if (!is_forest_kind(kind))
            throw UsageError("train: " + std::string(variant) + " is a heuristic");
        TrainOptions opts;
        opts.forest = to_forest_config(forest, 0);
        opts.k_pe = k_pe;
        opts.rng_seed = seed;
        Estimator est = train_variant(kind, graph->graph, opts);
        save_estimator(est, model_out);
    });
}

void lnb_eval_params_init(lnb_eval_params* params) {
    if (!params) return;
    SplitSpec d;
    params->test_fraction = d.test_fraction;
    params->val_fraction = d.val_fraction;
    params->tune = 0;
}

lnb_status lnb_evaluate(const lnb_graph* graph, const lnb_eval_params* eval,
                        const lnb_forest_params* forest, int k_pe, uint64_t seed,
                        const char* out_dir) {
    if (lnb_status s = require(graph && out_dir, "null argument")) return s;
    return guarded([&] {
        BenchmarkConfig cfg;
        if (eval) {
            cfg.split_spec.test_fraction = eval->test_fraction;
            cfg.split_spec.val_fraction = eval->val_fraction;
            cfg.tune = eval->tune != 0;
        }
        cfg.forest = to_forest_config(forest, 0);
        cfg.k_pe = k_pe;
        cfg.rng_seed = seed;
        run_benchmark(graph->graph, cfg, out_dir);
    });
}

lnb_status lnb_featurize(const lnb_graph* graph, const char* variant, int k_pe,
                         uint64_t seed, const char* matrix_csv_out,
                         const char* schema_json_out) {
    if (lnb_status s = require(graph && variant && matrix_csv_out, "null argument"))
        return s;
    return guarded([&] {
        Variant v = variant_from_string(variant);
        FeatureSchema schema = build_schema(graph->graph, v, k_pe);
        std::optional<PositionalTable> encodings;
        if (v == Variant::Shallow || v == Variant::Joint)
            encodings =
                laplacian_encodings(graph->graph, k_pe, derive_seed(seed, "spectral"));
        auto rows = build_rows(graph->graph, schema,
                               encodings ? &*encodings : nullptr,
                               derive_seed(seed, "features"));
        save_matrix(rows, schema, matrix_csv_out);
        if (schema_json_out) write_file(schema_json_out, schema_to_json(schema));
    });
}

lnb_status lnb_correlate(const lnb_graph* graph, double threshold, uint64_t seed,
                         const char* out_csv) {
    if (lnb_status s = require(graph && out_csv, "null argument")) return s;
    return guarded([&] {
        // Screen over the full joint feature set, positional encodings included.
        int k_pe = std::min<int>(16, static_cast<int>(graph->graph.nodes().size()) - 1);
        FeatureSchema schema = build_schema(graph->graph, Variant::Joint, k_pe);
        PositionalTable enc =
            laplacian_encodings(graph->graph, k_pe, derive_seed(seed, "spectral"));
        auto rows =
            build_rows(graph->graph, schema, &enc, derive_seed(seed, "features"));
        auto screened = correlation_screen(rows, schema, threshold);
        std::string out = "feature,correlation\n";
        for (const auto& fc : screened)
            out += fc.name + "," + format_double(fc.r) + "\n";
        write_file(out_csv, out);
    });
}

lnb_status lnb_importance(const char* model_path, const char* out_csv) {
    if (lnb_status s = require(model_path && out_csv, "null argument")) return s;
    return guarded([&] {
        Estimator est = load_estimator(model_path);
        if (!est.forest) throw DataError("estimator has no forest payload");
        std::string out = "feature,importance\n";
        for (std::size_t f = 0; f < est.forest->schema.width(); ++f)
            out += est.forest->schema.columns[f].first + "," +
                   format_double(est.forest->mdi[f]) + "\n";
        write_file(out_csv, out);
    });
}

lnb_status lnb_estimator_heuristic(const char* kind, lnb_estimator** out) {
    if (lnb_status s = require(kind && out, "null argument")) return s;
    return guarded([&] {
        EstimatorKind k = estimator_kind_from_string(kind);
        if (is_forest_kind(k))
            throw UsageError("estimator " + std::string(kind) +
                             " requires a model file");
        auto* est = new lnb_estimator_t{};
        est->estimator.kind = k;
        *out = est;
    });
}

lnb_status lnb_estimator_open(const char* model_path, lnb_estimator** out) {
    if (lnb_status s = require(model_path && out, "null argument")) return s;
    return guarded([&] { *out = new lnb_estimator_t{load_estimator(model_path)}; });
}

void lnb_estimator_close(lnb_estimator* estimator) { delete estimator; }

lnb_status lnb_predict_edge(const lnb_estimator* estimator, const lnb_graph* graph,
                            const char* channel_id, const char* src_pub,
                            double* p_hat, int* defined) {
    if (lnb_status s = require(estimator && graph && channel_id && src_pub && p_hat &&
                                   defined,
                               "null argument"))
        return s;
    return guarded([&] {
        const Channel& ch = graph->graph.channel(channel_id);
        if (src_pub != ch.node_a && src_pub != ch.node_b)
            throw DataError("src_pub is not an endpoint of channel " +
                            std::string(channel_id));
        DirectedEdge edge{src_pub, std::string(src_pub) == ch.node_a ? ch.node_b : ch.node_a,
                          channel_id};
        auto p = estimator->estimator.predict_edge(graph->graph, edge);
        *defined = p ? 1 : 0;
        *p_hat = p ? *p : 0.0;
    });
}

lnb_status lnb_route(const lnb_graph* graph, const lnb_estimator* estimator,
                     const char* src_pub, const char* dest_pub, int64_t amount_sat,
                     char** result_json) {
    if (lnb_status s = require(graph && estimator && src_pub && dest_pub && result_json,
                               "null argument"))
        return s;
    return guarded([&] {
        auto costs = edge_costs(graph->graph, estimator->estimator, amount_sat);
        RoutingResult result =
            find_path(graph->graph, costs, {src_pub, dest_pub, amount_sat});
        nlohmann::json path = nlohmann::json::array();
        for (std::size_t i = 0; i < result.path.size(); ++i) {
            path.push_back({{"channel_id", result.path[i].channel_id},
                            {"src", result.path[i].src},
                            {"dst", result.path[i].dst},
                            {"p_hat", result.per_hop_p[i]}});
        }
        nlohmann::json doc{{"found", result.found},
                           {"path", path},
                           {"total_cost", result.total_cost}};
        std::string text = doc.dump(2) + "\n";
        char* buf = new char[text.size() + 1];
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *result_json = buf;
    });
}

void lnb_sim_params_init(lnb_sim_params* params) {
    if (!params) return;
    SimConfig d;
    params->n_payments = d.n_payments;
    params->amount_log_mean = d.amount_log_mean;
    params->amount_log_sigma = d.amount_log_sigma;
    params->max_retries = d.max_retries;
    params->shift_balances = d.shift_balances ? 1 : 0;
    params->rng_seed = d.rng_seed;
}

lnb_status lnb_simulate(const lnb_graph* graph, const lnb_sim_params* params,
                        const char* estimators, const char* model_path,
                        const char* out_csv) {
    if (lnb_status s = require(graph && params && estimators && out_csv, "null argument"))
        return s;
    return guarded([&] {
        std::optional<Estimator> model;
        Estimator equal_split;  // kind defaults to equal-split
        std::vector<SimEstimator> sims;
        std::string names(estimators);
        std::size_t pos = 0;
        while (pos <= names.size()) {
            std::size_t comma = names.find(',', pos);
            std::string name = names.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (name == "equal-split") {
                sims.push_back({name, &equal_split});
            } else if (name == "capacity" || name == "oracle") {
                sims.push_back({name, nullptr});
            } else if (name == "model") {
                if (!model_path)
                    throw UsageError("simulate: \"model\" estimator needs a model file");
                if (!model) model = load_estimator(model_path);
                sims.push_back({name, &*model});
            } else {
                throw UsageError("simulate: unknown estimator \"" + name + "\"");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        SimConfig cfg;
        cfg.n_payments = params->n_payments;
        cfg.amount_log_mean = params->amount_log_mean;
        cfg.amount_log_sigma = params->amount_log_sigma;
        cfg.max_retries = params->max_retries;
        cfg.shift_balances = params->shift_balances != 0;
        cfg.rng_seed = params->rng_seed;
        SimReport report = simulate(graph->graph, sims, cfg);
        save_sim_report(report, out_csv);
    });
}

}  // extern "C"
