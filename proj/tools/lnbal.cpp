// lnbal: channel-balance interpolation pipeline over the lnbalance C API.
//
// Subcommands: synth, featurize, train, evaluate, correlate, importance,
// predict, route, simulate. A JSON config file may provide defaults; command
// line flags override it. Exit codes: 0 success, 1 usage error, 2 data or
// validation error, 3 internal error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lnbalance.h"

namespace {

struct RunConfig {
    std::string snapshot;
    std::string labels;
    std::string out;
    std::string model;
    std::string schema_out;
    std::string variant = "joint";
    std::uint64_t seed = 0;
    int k_pe = 16;
    int trees = 200;
    int min_samples_leaf = 2;
    int max_depth = 0;
    int features_per_split = 0;
    bool no_bootstrap = false;
    // synth
    int n_nodes = 200;
    int attach_m = 2;
    double depleted_fraction = 0.30;
    double signal_strength = 0.8;
    double capacity_log_mean = 14.5;
    double capacity_log_sigma = 1.2;
    std::string truth_out;
    // evaluate
    double test_fraction = 0.10;
    double val_fraction = 0.10;
    bool tune = false;
    double threshold = 0.1;
    // predict / route
    std::string channel_id;
    std::string src;
    std::string dest;
    std::int64_t amount_sat = 0;
    // simulate
    int payments = 500;
    int max_retries = 20;
    std::string sim_models = "equal-split,capacity,model";
    bool shift_balances = false;
};

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw CLI::ValidationError("--config", e.what());
    }
    auto get = [&doc](const char* key, auto& field) {
        if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("snapshot", cfg.snapshot);
    get("labels", cfg.labels);
    get("out", cfg.out);
    get("model", cfg.model);
    get("variant", cfg.variant);
    get("seed", cfg.seed);
    get("k_pe", cfg.k_pe);
    get("trees", cfg.trees);
    get("min_samples_leaf", cfg.min_samples_leaf);
    get("max_depth", cfg.max_depth);
    get("features_per_split", cfg.features_per_split);
    get("n_nodes", cfg.n_nodes);
    get("attach_m", cfg.attach_m);
    get("depleted_fraction", cfg.depleted_fraction);
    get("signal_strength", cfg.signal_strength);
    get("test_fraction", cfg.test_fraction);
    get("val_fraction", cfg.val_fraction);
    get("payments", cfg.payments);
    get("max_retries", cfg.max_retries);
}

int report(lnb_status status) {
    if (status != LNB_OK) std::cerr << "error: " << lnb_last_error() << "\n";
    return status;
}

lnb_forest_params forest_params(const RunConfig& cfg) {
    lnb_forest_params fp;
    lnb_forest_params_init(&fp);
    fp.n_trees = cfg.trees;
    fp.max_depth = cfg.max_depth;
    fp.min_samples_leaf = cfg.min_samples_leaf;
    fp.features_per_split = cfg.features_per_split;
    fp.bootstrap = cfg.no_bootstrap ? 0 : 1;
    return fp;
}

struct GraphHandle {
    lnb_graph* graph = nullptr;
    ~GraphHandle() { lnb_graph_close(graph); }
};

struct EstimatorHandle {
    lnb_estimator* est = nullptr;
    ~EstimatorHandle() { lnb_estimator_close(est); }
};

int open_graph(const RunConfig& cfg, bool need_labels, GraphHandle& handle) {
    if (lnb_status s = report(lnb_graph_open(cfg.snapshot.c_str(), &handle.graph)))
        return s;
    if (!cfg.labels.empty())
        if (lnb_status s =
                report(lnb_graph_load_labels(handle.graph, cfg.labels.c_str())))
            return s;
    if (need_labels && cfg.labels.empty()) {
        std::cerr << "error: this subcommand requires --labels\n";
        return LNB_ERR_USAGE;
    }
    return LNB_OK;
}

int open_estimator(const RunConfig& cfg, EstimatorHandle& handle) {
    if (!cfg.model.empty()) return report(lnb_estimator_open(cfg.model.c_str(), &handle.est));
    return report(lnb_estimator_heuristic(cfg.variant.c_str(), &handle.est));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"channel balance interpolation and reliability routing"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)")
        ->each([&cfg](const std::string& path) { apply_config_file(path, cfg); });
    app.add_option("--seed", cfg.seed, "global RNG seed");

    auto add_graph_opts = [&](CLI::App* cmd, bool labels_required) {
        cmd->add_option("--snapshot", cfg.snapshot, "snapshot JSON path")->required();
        auto* opt = cmd->add_option("--labels", cfg.labels, "labels CSV path");
        if (labels_required) opt->required();
    };
    auto add_forest_opts = [&](CLI::App* cmd) {
        cmd->add_option("--trees", cfg.trees, "number of trees");
        cmd->add_option("--min-samples-leaf", cfg.min_samples_leaf, "minimum leaf size");
        cmd->add_option("--max-depth", cfg.max_depth, "maximum tree depth (0 = unlimited)");
        cmd->add_option("--features-per-split", cfg.features_per_split,
                        "features per split (0=third, -1=sqrt, -2=all, >0 explicit)");
        cmd->add_flag("--no-bootstrap", cfg.no_bootstrap, "disable bootstrap resampling");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic network");
    synth->add_option("--nodes", cfg.n_nodes, "number of nodes");
    synth->add_option("--attach-m", cfg.attach_m, "channels per new node");
    synth->add_option("--depleted-fraction", cfg.depleted_fraction,
                      "fraction of one-sided channels");
    synth->add_option("--signal-strength", cfg.signal_strength,
                      "feature-balance coupling in [0,1]");
    synth->add_option("--capacity-log-mean", cfg.capacity_log_mean,
                      "log-space capacity mean (sat)");
    synth->add_option("--capacity-log-sigma", cfg.capacity_log_sigma,
                      "log-space capacity sigma");
    synth->add_option("--snapshot", cfg.snapshot, "snapshot JSON output")->required();
    synth->add_option("--labels", cfg.labels, "labels CSV output");
    synth->add_option("--truth", cfg.truth_out, "ground-truth p CSV output");

    auto* featurize = app.add_subcommand("featurize", "write the design matrix");
    add_graph_opts(featurize, true);
    featurize->add_option("--variant", cfg.variant, "feature variant");
    featurize->add_option("--k-pe", cfg.k_pe, "positional encoding dimensions");
    featurize->add_option("--out", cfg.out, "matrix CSV output")->required();
    featurize->add_option("--schema-out", cfg.schema_out, "schema JSON sidecar");

    auto* train = app.add_subcommand("train", "train one forest variant");
    add_graph_opts(train, true);
    add_forest_opts(train);
    train->add_option("--variant", cfg.variant, "forest variant");
    train->add_option("--k-pe", cfg.k_pe, "positional encoding dimensions");
    train->add_option("--out", cfg.out, "model file output")->required();

    auto* evaluate = app.add_subcommand("evaluate", "run the full benchmark");
    add_graph_opts(evaluate, true);
    add_forest_opts(evaluate);
    evaluate->add_option("--k-pe", cfg.k_pe, "positional encoding dimensions");
    evaluate->add_option("--test-fraction", cfg.test_fraction, "test fold fraction");
    evaluate->add_option("--val-fraction", cfg.val_fraction, "validation fold fraction");
    evaluate->add_flag("--tune", cfg.tune, "grid-select min_samples_leaf on validation");
    evaluate->add_option("--out", cfg.out, "report output directory")->required();

    auto* correlate = app.add_subcommand("correlate", "feature-target correlation screen");
    add_graph_opts(correlate, true);
    correlate->add_option("--threshold", cfg.threshold, "absolute correlation cutoff");
    correlate->add_option("--out", cfg.out, "CSV output")->required();

    auto* importance = app.add_subcommand("importance", "MDI importances of a model");
    importance->add_option("--model", cfg.model, "model file")->required();
    importance->add_option("--out", cfg.out, "CSV output")->required();

    auto* predict = app.add_subcommand("predict", "predict one directed edge");
    add_graph_opts(predict, false);
    predict->add_option("--model", cfg.model, "model file (default: heuristic --variant)");
    predict->add_option("--variant", cfg.variant, "heuristic kind when no model given");
    predict->add_option("--channel", cfg.channel_id, "channel id")->required();
    predict->add_option("--src", cfg.src, "source pub key")->required();

    auto* route = app.add_subcommand("route", "most reliable path between two nodes");
    add_graph_opts(route, false);
    route->add_option("--model", cfg.model, "model file (default: heuristic --variant)");
    route->add_option("--variant", cfg.variant, "heuristic kind when no model given");
    route->add_option("--src", cfg.src, "source pub key")->required();
    route->add_option("--dest", cfg.dest, "destination pub key")->required();
    route->add_option("--amount-sat", cfg.amount_sat, "payment amount (sat)")->required();

    auto* simulate = app.add_subcommand("simulate", "payment retry simulation");
    add_graph_opts(simulate, true);
    simulate->add_option("--model", cfg.model, "model file for the \"model\" entry");
    simulate->add_option("--models", cfg.sim_models,
                         "comma list of equal-split,capacity,oracle,model");
    simulate->add_option("--payments", cfg.payments, "number of payments");
    simulate->add_option("--max-retries", cfg.max_retries, "attempts per payment");
    simulate->add_flag("--shift-balances", cfg.shift_balances,
                       "apply successful payments to balances");
    simulate->add_option("--out", cfg.out, "SimReport CSV output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : LNB_ERR_USAGE;
    }

    if (synth->parsed()) {
        lnb_synth_params sp;
        lnb_synth_params_init(&sp);
        sp.n_nodes = cfg.n_nodes;
        sp.attach_m = cfg.attach_m;
        sp.capacity_log_mean = cfg.capacity_log_mean;
        sp.capacity_log_sigma = cfg.capacity_log_sigma;
        sp.depleted_fraction = cfg.depleted_fraction;
        sp.signal_strength = cfg.signal_strength;
        sp.rng_seed = cfg.seed;
        return report(lnb_synth(&sp, cfg.snapshot.c_str(),
                                cfg.labels.empty() ? nullptr : cfg.labels.c_str(),
                                cfg.truth_out.empty() ? nullptr : cfg.truth_out.c_str()));
    }

    if (featurize->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, true, g)) return s;
        return report(lnb_featurize(g.graph, cfg.variant.c_str(), cfg.k_pe, cfg.seed,
                                    cfg.out.c_str(),
                                    cfg.schema_out.empty() ? nullptr
                                                           : cfg.schema_out.c_str()));
    }

    if (train->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, true, g)) return s;
        lnb_forest_params fp = forest_params(cfg);
        return report(lnb_train(g.graph, cfg.variant.c_str(), &fp, cfg.k_pe, cfg.seed,
                                cfg.out.c_str()));
    }

    if (evaluate->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, true, g)) return s;
        lnb_forest_params fp = forest_params(cfg);
        lnb_eval_params ep;
        lnb_eval_params_init(&ep);
        ep.test_fraction = cfg.test_fraction;
        ep.val_fraction = cfg.val_fraction;
        ep.tune = cfg.tune ? 1 : 0;
        return report(
            lnb_evaluate(g.graph, &ep, &fp, cfg.k_pe, cfg.seed, cfg.out.c_str()));
    }

    if (correlate->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, true, g)) return s;
        return report(lnb_correlate(g.graph, cfg.threshold, cfg.seed, cfg.out.c_str()));
    }

    if (importance->parsed())
        return report(lnb_importance(cfg.model.c_str(), cfg.out.c_str()));

    if (predict->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, false, g)) return s;
        EstimatorHandle est;
        if (int s = open_estimator(cfg, est)) return s;
        double p_hat = 0.0;
        int defined = 0;
        if (lnb_status s = report(lnb_predict_edge(est.est, g.graph,
                                                   cfg.channel_id.c_str(),
                                                   cfg.src.c_str(), &p_hat, &defined)))
            return s;
        if (defined)
            std::printf("%.6f\n", p_hat);
        else
            std::printf("undefined\n");
        return 0;
    }

    if (route->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, false, g)) return s;
        EstimatorHandle est;
        if (int s = open_estimator(cfg, est)) return s;
        char* result = nullptr;
        if (lnb_status s = report(lnb_route(g.graph, est.est, cfg.src.c_str(),
                                            cfg.dest.c_str(), cfg.amount_sat, &result)))
            return s;
        std::fputs(result, stdout);
        lnb_free_string(result);
        return 0;
    }

    if (simulate->parsed()) {
        GraphHandle g;
        if (int s = open_graph(cfg, true, g)) return s;
        lnb_sim_params sp;
        lnb_sim_params_init(&sp);
        sp.n_payments = cfg.payments;
        sp.max_retries = cfg.max_retries;
        sp.shift_balances = cfg.shift_balances ? 1 : 0;
        sp.rng_seed = cfg.seed;
        return report(lnb_simulate(g.graph, &sp, cfg.sim_models.c_str(),
                                   cfg.model.empty() ? nullptr : cfg.model.c_str(),
                                   cfg.out.c_str()));
    }

    return LNB_ERR_USAGE;
}
