/* C API for the lnbalance shared library: channel-balance interpolation and
 * reliability-aware pathfinding for payment channel networks.
 *
 * All functions return an lnb_status; on failure lnb_last_error() holds a
 * thread-local description. Handles are opaque and freed with their *_close
 * function. Strings returned through char** are freed with lnb_free_string.
 */
#ifndef LNBALANCE_H
#define LNBALANCE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int lnb_status;
#define LNB_OK 0
#define LNB_ERR_USAGE 1    /* caller misuse: bad parameters, unknown names */
#define LNB_ERR_DATA 2     /* bad input data: parse/validation failures */
#define LNB_ERR_INTERNAL 3 /* broken internal invariant */

typedef struct lnb_graph_t lnb_graph;
typedef struct lnb_estimator_t lnb_estimator;

const char* lnb_version(void);
const char* lnb_last_error(void);
void lnb_free_string(char* s);

/* ---- graph ---- */

lnb_status lnb_graph_open(const char* snapshot_path, lnb_graph** out);
lnb_status lnb_graph_load_labels(lnb_graph* graph, const char* labels_csv_path);
void lnb_graph_close(lnb_graph* graph);
lnb_status lnb_graph_counts(const lnb_graph* graph, size_t* n_nodes,
                            size_t* n_channels, size_t* n_labels);

/* ---- synthetic data ---- */

typedef struct {
    int n_nodes;
    int attach_m;
    double capacity_log_mean;
    double capacity_log_sigma;
    double depleted_fraction;
    double signal_strength;
    uint64_t rng_seed;
} lnb_synth_params;

void lnb_synth_params_init(lnb_synth_params* params); /* fill defaults */

/* Writes snapshot JSON, labels CSV and ground-truth CSV. Either of labels_out
 * / truth_out may be NULL to skip. */
lnb_status lnb_synth(const lnb_synth_params* params, const char* snapshot_out,
                     const char* labels_out, const char* truth_out);

/* ---- training and evaluation ---- */

typedef struct {
    int n_trees;
    int max_depth;          /* <= 0 means unlimited */
    int min_samples_leaf;
    int features_per_split; /* 0 = one third, -1 = sqrt, -2 = all, > 0 explicit */
    int bootstrap;          /* boolean */
} lnb_forest_params;

void lnb_forest_params_init(lnb_forest_params* params);

lnb_status lnb_train(const lnb_graph* graph, const char* variant,
                     const lnb_forest_params* forest, int k_pe, uint64_t seed,
                     const char* model_out);

typedef struct {
    double test_fraction;
    double val_fraction;
    int tune; /* boolean: grid-select min_samples_leaf on the validation fold */
} lnb_eval_params;

void lnb_eval_params_init(lnb_eval_params* params);

/* Full benchmark: trains the six forest variants, evaluates all eight
 * estimators, writes the report files into out_dir. */
lnb_status lnb_evaluate(const lnb_graph* graph, const lnb_eval_params* eval,
                        const lnb_forest_params* forest, int k_pe, uint64_t seed,
                        const char* out_dir);

lnb_status lnb_featurize(const lnb_graph* graph, const char* variant, int k_pe,
                         uint64_t seed, const char* matrix_csv_out,
                         const char* schema_json_out);

lnb_status lnb_correlate(const lnb_graph* graph, double threshold, uint64_t seed,
                         const char* out_csv);

/* Per-feature MDI importances of a saved model, as CSV. */
lnb_status lnb_importance(const char* model_path, const char* out_csv);

/* ---- inference and routing ---- */

/* kind: "equal-split" or "local-max-htlc" for the heuristics; anything else
 * is rejected (forest estimators are opened from a model file). */
lnb_status lnb_estimator_heuristic(const char* kind, lnb_estimator** out);
lnb_status lnb_estimator_open(const char* model_path, lnb_estimator** out);
void lnb_estimator_close(lnb_estimator* estimator);

/* *defined is 0 when the prediction is undefined (missing policy); p_hat is
 * only meaningful when *defined is 1. */
lnb_status lnb_predict_edge(const lnb_estimator* estimator, const lnb_graph* graph,
                            const char* channel_id, const char* src_pub,
                            double* p_hat, int* defined);

/* Result JSON: {"found", "path": [{channel_id, src, dst, p_hat}...],
 * "total_cost"}. */
lnb_status lnb_route(const lnb_graph* graph, const lnb_estimator* estimator,
                     const char* src_pub, const char* dest_pub, int64_t amount_sat,
                     char** result_json);

typedef struct {
    int n_payments;
    double amount_log_mean;
    double amount_log_sigma;
    int max_retries;
    int shift_balances; /* boolean */
    uint64_t rng_seed;
} lnb_sim_params;

void lnb_sim_params_init(lnb_sim_params* params);

/* estimators: comma-separated list of "equal-split", "capacity", "oracle",
 * "model" ("model" requires model_path). The graph must carry ground-truth
 * labels on every edge. */
lnb_status lnb_simulate(const lnb_graph* graph, const lnb_sim_params* params,
                        const char* estimators, const char* model_path,
                        const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* LNBALANCE_H */
