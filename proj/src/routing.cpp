#include "lnbal/routing.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <tuple>

#include "lnbal/util.hpp"

namespace lnbal {

std::map<DirectedEdge, double> edge_costs(const ChannelGraph& graph,
                                          const Estimator& estimator,
                                          std::int64_t amount_sat) {
    std::map<DirectedEdge, double> costs;
    for (const DirectedEdge& edge : graph.all_edges()) {
        const auto& pol = graph.policy(edge);
        if (!pol || pol->disabled) continue;
        auto p_hat = estimator.predict_edge(graph, edge);
        if (!p_hat || *p_hat <= kProbabilityFloor) continue;
        double effective_balance =
            *p_hat * static_cast<double>(graph.channel(edge.channel_id).capacity_sat);
        if (effective_balance < static_cast<double>(amount_sat)) continue;
        costs.emplace(edge, -std::log(std::max(*p_hat, kProbabilityFloor)));
    }
    return costs;
}

namespace {

struct PathState {
    double cost = 0.0;
    std::size_t hops = 0;
    std::vector<NodeId> seq;
    std::vector<DirectedEdge> edges;

    bool better_than(const PathState& other) const {
        if (cost != other.cost) return cost < other.cost;
        if (hops != other.hops) return hops < other.hops;
        return seq < other.seq;
    }
};

}  // namespace

RoutingResult find_path(const ChannelGraph& graph,
                        const std::map<DirectedEdge, double>& costs,
                        const RouteQuery& query) {
    if (!graph.has_node(query.src)) throw DataError("unknown source node: " + query.src);
    if (!graph.has_node(query.dest))
        throw DataError("unknown destination node: " + query.dest);
    if (query.src == query.dest) throw UsageError("route: src equals dest");
    if (query.amount_sat <= 0) throw UsageError("route: amount must be positive");

    std::map<NodeId, PathState> best;
    best[query.src] = PathState{0.0, 0, {query.src}, {}};

    using QueueEntry = std::tuple<double, std::size_t, NodeId>;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue;
    queue.emplace(0.0, 0, query.src);

    while (!queue.empty()) {
        auto [cost, hops, node] = queue.top();
        queue.pop();
        auto it = best.find(node);
        if (it == best.end() || cost > it->second.cost) continue;  // stale entry
        const PathState state = it->second;
        if (state.cost != cost) continue;
        for (const DirectedEdge& edge : graph.adjacency(node)) {
            auto cit = costs.find(edge);
            if (cit == costs.end()) continue;  // pruned (infinite cost)
            PathState cand;
            cand.cost = state.cost + cit->second;
            cand.hops = state.hops + 1;
            cand.seq = state.seq;
            cand.seq.push_back(edge.dst);
            cand.edges = state.edges;
            cand.edges.push_back(edge);
            auto bit = best.find(edge.dst);
            if (bit == best.end() || cand.better_than(bit->second)) {
                best[edge.dst] = cand;
                queue.emplace(cand.cost, cand.hops, edge.dst);
            }
        }
    }

    RoutingResult result;
    auto it = best.find(query.dest);
    if (it == best.end()) return result;  // found = false
    result.found = true;
    result.path = it->second.edges;
    result.total_cost = it->second.cost;
    for (const DirectedEdge& edge : result.path) {
        auto cit = costs.find(edge);
        result.per_hop_p.push_back(std::exp(-cit->second));
    }
    return result;
}

namespace {

struct Payment {
    NodeId src;
    NodeId dest;
    std::int64_t amount_sat;
};

}  // namespace

SimReport simulate(const ChannelGraph& graph, const std::vector<SimEstimator>& estimators,
                   const SimConfig& config) {
    if (config.n_payments < 1) throw UsageError("simulate: n_payments must be >= 1");
    if (config.max_retries < 1) throw UsageError("simulate: max_retries must be >= 1");
    for (const DirectedEdge& edge : graph.all_edges())
        if (!graph.label(edge))
            throw DataError("simulate: edge without ground-truth balance on channel " +
                            edge.channel_id);
    std::vector<NodeId> node_ids;
    for (const auto& [id, info] : graph.nodes()) node_ids.push_back(id);
    if (node_ids.size() < 2) throw UsageError("simulate: need at least 2 nodes");

    // The same workload for every estimator.
    std::mt19937_64 rng(config.rng_seed);
    std::uniform_int_distribution<std::size_t> pick(0, node_ids.size() - 1);
    std::lognormal_distribution<double> amount(config.amount_log_mean,
                                               config.amount_log_sigma);
    std::vector<Payment> payments;
    payments.reserve(config.n_payments);
    for (int i = 0; i < config.n_payments; ++i) {
        std::size_t a = pick(rng), b = pick(rng);
        while (b == a) b = pick(rng);
        payments.push_back({node_ids[a], node_ids[b],
                            std::max<std::int64_t>(1, std::llround(amount(rng)))});
    }

    std::int64_t max_capacity = 1;
    for (const auto& [cid, ch] : graph.channels())
        max_capacity = std::max(max_capacity, ch.capacity_sat);

    SimReport report;
    report.n_payments = config.n_payments;

    for (const SimEstimator& sim_est : estimators) {
        // Amount-independent per-edge scores, computed once.
        std::map<DirectedEdge, std::pair<double, double>> edge_score;  // (p-like, cost)
        for (const DirectedEdge& edge : graph.all_edges()) {
            const auto& pol = graph.policy(edge);
            if (!pol || pol->disabled) continue;
            const Channel& ch = graph.channel(edge.channel_id);
            if (sim_est.name == "oracle") {
                double p = graph.label(edge)->p;
                if (p <= kProbabilityFloor) continue;
                edge_score.emplace(edge,
                                   std::make_pair(p, -std::log(std::max(p, kProbabilityFloor))));
            } else if (sim_est.name == "capacity") {
                // Capacity-proportional control: bias to large channels, prune
                // only on total capacity.
                double cost = std::log(static_cast<double>(max_capacity) /
                                       static_cast<double>(ch.capacity_sat));
                edge_score.emplace(edge, std::make_pair(1.0, cost));
            } else {
                if (!sim_est.estimator)
                    throw UsageError("simulate: estimator payload missing for " +
                                     sim_est.name);
                auto p_hat = sim_est.estimator->predict_edge(graph, edge);
                if (!p_hat || *p_hat <= kProbabilityFloor) continue;
                edge_score.emplace(
                    edge, std::make_pair(*p_hat,
                                         -std::log(std::max(*p_hat, kProbabilityFloor))));
            }
        }

        std::map<DirectedEdge, std::int64_t> balances;
        for (const DirectedEdge& edge : graph.all_edges())
            balances.emplace(edge, graph.label(edge)->y_sat);

        SimEstimatorReport er;
        er.name = sim_est.name;
        er.attempts_histogram.assign(config.max_retries, 0);
        std::vector<double> all_attempts;

        for (const Payment& payment : payments) {
            std::set<DirectedEdge> excluded;
            bool success = false;
            int attempts = 0;
            while (attempts < config.max_retries) {
                std::map<DirectedEdge, double> costs;
                for (const auto& [edge, score] : edge_score) {
                    if (excluded.count(edge)) continue;
                    const Channel& ch = graph.channel(edge.channel_id);
                    double effective =
                        score.first * static_cast<double>(ch.capacity_sat);
                    if (effective < static_cast<double>(payment.amount_sat)) continue;
                    costs.emplace(edge, score.second);
                }
                RoutingResult route = find_path(
                    graph, costs, {payment.src, payment.dest, payment.amount_sat});
                if (!route.found) break;
                ++attempts;
                const DirectedEdge* failed_hop = nullptr;
                for (const DirectedEdge& hop : route.path) {
                    if (balances.at(hop) < payment.amount_sat) {
                        failed_hop = &hop;
                        break;
                    }
                }
                if (!failed_hop) {
                    success = true;
                    if (config.shift_balances) {
                        for (const DirectedEdge& hop : route.path) {
                            balances.at(hop) -= payment.amount_sat;
                            balances.at({hop.dst, hop.src, hop.channel_id}) +=
                                payment.amount_sat;
                        }
                    }
                    break;
                }
                excluded.insert(*failed_hop);
            }
            if (success) {
                ++er.n_success;
                ++er.attempts_histogram[attempts - 1];
                all_attempts.push_back(static_cast<double>(attempts));
            } else {
                all_attempts.push_back(static_cast<double>(config.max_retries));
            }
        }

        er.success_rate =
            static_cast<double>(er.n_success) / static_cast<double>(config.n_payments);
        double sum = 0.0;
        for (double a : all_attempts) sum += a;
        er.mean_attempts = sum / static_cast<double>(all_attempts.size());
        std::sort(all_attempts.begin(), all_attempts.end());
        std::size_t n = all_attempts.size();
        er.median_attempts = n % 2 ? all_attempts[n / 2]
                                   : (all_attempts[n / 2 - 1] + all_attempts[n / 2]) / 2.0;
        report.estimators.push_back(std::move(er));
    }
    return report;
}

void save_sim_report(const SimReport& report, const std::string& path) {
    std::string out = "estimator,n_payments,n_success,success_rate,mean_attempts,median_attempts";
    std::size_t max_hist = 0;
    for (const auto& er : report.estimators)
        max_hist = std::max(max_hist, er.attempts_histogram.size());
    for (std::size_t i = 0; i < max_hist; ++i)
        out += ",attempts_" + std::to_string(i + 1);
    out += "\n";
    for (const auto& er : report.estimators) {
        out += er.name + "," + std::to_string(report.n_payments) + "," +
               std::to_string(er.n_success) + "," + format_double(er.success_rate) + "," +
               format_double(er.mean_attempts) + "," + format_double(er.median_attempts);
        for (std::size_t i = 0; i < max_hist; ++i)
            out += "," + std::to_string(i < er.attempts_histogram.size()
                                            ? er.attempts_histogram[i]
                                            : 0);
        out += "\n";
    }
    write_file(path, out);
}

}  // namespace lnbal
