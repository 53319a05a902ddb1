#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lnbal/graph.hpp"

namespace lnbal {

struct BalanceSeries {
    DirectedEdge edge;
    std::int64_t capacity_sat = 0;
    // (timestamp, local_balance_sat), strictly increasing timestamps.
    std::vector<std::pair<std::int64_t, std::int64_t>> samples;
};

struct SynthConfig {
    int n_nodes = 200;
    int attach_m = 2;             // preferential-attachment channels per new node
    double capacity_log_mean = 14.5;   // log-space, sat (~2M sat median)
    double capacity_log_sigma = 1.2;
    double depleted_fraction = 0.30;
    double signal_strength = 0.8;  // couples policies (and topology) to balances
    std::uint64_t rng_seed = 0;
};

void validate(const SynthConfig& config);

// One smoothed draw from the series: uniform pick over samples plus Gaussian
// noise at Silverman bandwidth h = 0.9 * min(sigma, IQR/1.34) * n^(-1/5),
// clamped to [0, capacity].
std::int64_t kde_sample(const BalanceSeries& series, std::uint64_t rng_seed);

// Balance series CSV: header `channel_id,src_pub,timestamp,balance_sat`.
std::vector<BalanceSeries> load_balance_series(const ChannelGraph& graph,
                                               const std::string& path);

// Connected preferential-attachment network with log-normal capacities,
// bimodal balances (depleted_fraction pushed to one side via Beta(0.5,12)),
// and policies whose max_htlc carries a balance signal of the configured
// strength. Every edge is labeled.
ChannelGraph generate_synthetic(const SynthConfig& config);

// Ground-truth CSV of every p: header `channel_id,src_pub,p`.
void save_ground_truth(const ChannelGraph& graph, const std::string& path);

}  // namespace lnbal
