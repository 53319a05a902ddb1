#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lnbal/models.hpp"

namespace lnbal {

// Floor for predicted p when converting to cost; keeps -ln finite.
constexpr double kProbabilityFloor = 1e-6;

struct RouteQuery {
    NodeId src;
    NodeId dest;
    std::int64_t amount_sat = 0;
};

struct RoutingResult {
    std::vector<DirectedEdge> path;
    std::vector<double> per_hop_p;
    double total_cost = 0.0;  // sum of -ln(p_hat) over hops
    bool found = false;
};

// -ln(p_hat) per enabled, policy-bearing edge; edges whose effective balance
// p_hat * capacity falls below the amount (or whose p_hat <= floor) are
// pruned (absent from the map, treated as infinite).
std::map<DirectedEdge, double> edge_costs(const ChannelGraph& graph,
                                          const Estimator& estimator,
                                          std::int64_t amount_sat);

// Dijkstra over finite-cost edges; deterministic tie-break by
// (cost, hop count, lexicographic node sequence).
RoutingResult find_path(const ChannelGraph& graph,
                        const std::map<DirectedEdge, double>& costs,
                        const RouteQuery& query);

struct SimConfig {
    int n_payments = 500;
    double amount_log_mean = 11.0;  // log-space sat (~60k sat median)
    double amount_log_sigma = 1.0;
    int max_retries = 20;  // attempts per payment
    bool shift_balances = false;
    std::uint64_t rng_seed = 0;
};

struct SimEstimatorReport {
    std::string name;
    std::size_t n_success = 0;
    double success_rate = 0.0;
    double mean_attempts = 0.0;    // failures counted at max_retries
    double median_attempts = 0.0;
    std::vector<std::size_t> attempts_histogram;  // index = attempts-1
};

struct SimReport {
    int n_payments = 0;
    std::vector<SimEstimatorReport> estimators;
};

// A cost assignment strategy for the simulator. "oracle" reads true balances,
// "capacity" is the capacity-proportional control.
struct SimEstimator {
    std::string name;
    const Estimator* estimator = nullptr;  // nullptr for oracle / capacity
};

// Trial-and-error payment simulation against ground-truth balances (every
// edge must be labeled). Each failed hop is excluded for the remainder of
// that payment, then the route is recomputed.
SimReport simulate(const ChannelGraph& graph,
                   const std::vector<SimEstimator>& estimators,
                   const SimConfig& config);

void save_sim_report(const SimReport& report, const std::string& path);

}  // namespace lnbal
