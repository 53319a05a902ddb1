#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "lnbal/routing.hpp"
#include "lnbal/util.hpp"

using namespace lnbal;
using namespace lnbal::testing;

namespace {

// A channel whose local-max-htlc heuristic prediction encodes an arbitrary
// per-direction p_hat: max_htlc_msat = p * capacity_sat * 1000.
void add_p_channel(ChannelGraph& g, const std::string& id, const NodeId& a,
                   const NodeId& b, double p_ab, double p_ba,
                   std::int64_t cap = 1'000'000) {
    Channel ch;
    ch.channel_id = id;
    ch.node_a = a;
    ch.node_b = b;
    ch.capacity_sat = cap;
    ch.policy_a_to_b = basic_policy(
        static_cast<std::int64_t>(std::llround(p_ab * static_cast<double>(cap) * 1000)));
    ch.policy_b_to_a = basic_policy(
        static_cast<std::int64_t>(std::llround(p_ba * static_cast<double>(cap) * 1000)));
    g.add_channel(std::move(ch));
}

Estimator heuristic() {
    Estimator est;
    est.kind = EstimatorKind::LocalMaxHtlc;
    return est;
}

// Independent oracle: exhaustive enumeration of simple paths over the
// finite-cost edges.
void enumerate_paths(const ChannelGraph& g, const std::map<DirectedEdge, double>& costs,
                     const NodeId& node, const NodeId& dest, std::set<NodeId>& visited,
                     double cost_so_far, double& best, bool& found) {
    if (node == dest) {
        found = true;
        best = std::min(best, cost_so_far);
        return;
    }
    for (const DirectedEdge& edge : g.adjacency(node)) {
        auto it = costs.find(edge);
        if (it == costs.end() || visited.count(edge.dst)) continue;
        visited.insert(edge.dst);
        enumerate_paths(g, costs, edge.dst, dest, visited, cost_so_far + it->second,
                        best, found);
        visited.erase(edge.dst);
    }
}

}  // namespace

TEST_CASE("edge cost values and pruning") {
    ChannelGraph g;
    g.add_node({nid('a'), {}, ""});
    g.add_node({nid('b'), {}, ""});
    add_p_channel(g, "1", nid('a'), nid('b'), 1.0, 0.5);

    SUBCASE("p_hat 1.0 costs zero, p_hat 0.5 costs ln 2") {
        auto costs = edge_costs(g, heuristic(), 100'000);
        REQUIRE(costs.size() == 2);
        CHECK(costs.at({nid('a'), nid('b'), "1"}) == doctest::Approx(0.0));
        CHECK(costs.at({nid('b'), nid('a'), "1"}) ==
              doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("effective balance below the amount prunes the edge") {
        // p_hat 0.5 on a 1M sat channel: effective balance 500k.
        auto costs = edge_costs(g, heuristic(), 600'000);
        CHECK(costs.count({nid('b'), nid('a'), "1"}) == 0);
        CHECK(costs.count({nid('a'), nid('b'), "1"}) == 1);
        auto ok = edge_costs(g, heuristic(), 400'000);
        CHECK(ok.at({nid('b'), nid('a'), "1"}) == doctest::Approx(std::log(2.0)));
    }
    SUBCASE("disabled policies never get a cost") {
        Channel ch = g.channel("1");
        ch.channel_id = "2";
        ch.policy_a_to_b->disabled = true;
        g.add_channel(std::move(ch));
        auto costs = edge_costs(g, heuristic(), 1000);
        CHECK(costs.count({nid('a'), nid('b'), "2"}) == 0);
        CHECK(costs.count({nid('b'), nid('a'), "2"}) == 1);
    }
}

TEST_CASE("pruning is monotone in the amount") {
    ChannelGraph g;
    for (char c : {'a', 'b', 'c', 'd'}) g.add_node({nid(c), {}, ""});
    add_p_channel(g, "1", nid('a'), nid('b'), 0.9, 0.1, 500'000);
    add_p_channel(g, "2", nid('b'), nid('c'), 0.5, 0.5, 2'000'000);
    add_p_channel(g, "3", nid('c'), nid('d'), 0.02, 0.98, 100'000);
    auto small = edge_costs(g, heuristic(), 1'000);
    auto large = edge_costs(g, heuristic(), 500'000);
    CHECK(large.size() < small.size());
    for (const auto& [edge, cost] : large) {
        REQUIRE(small.count(edge) == 1);
        CHECK(small.at(edge) == cost);
    }
}

TEST_CASE("a reliable two-hop route beats a risky direct channel") {
    ChannelGraph g;
    for (char c : {'a', 'b', 'c'}) g.add_node({nid(c), {}, ""});
    add_p_channel(g, "1", nid('a'), nid('b'), 0.9, 0.9);    // direct
    add_p_channel(g, "2", nid('a'), nid('c'), 0.99, 0.99);  // detour leg 1
    add_p_channel(g, "3", nid('b'), nid('c'), 0.99, 0.99);  // detour leg 2
    auto costs = edge_costs(g, heuristic(), 10'000);
    RoutingResult r = find_path(g, costs, {nid('a'), nid('b'), 10'000});
    REQUIRE(r.found);
    REQUIRE(r.path.size() == 2);
    CHECK(r.path[0].dst == nid('c'));
    CHECK(r.total_cost == doctest::Approx(-2.0 * std::log(0.99)).epsilon(1e-9));
    CHECK(r.total_cost < -std::log(0.9));
    // Cost additivity: the total is exactly the sum of per-hop -ln p.
    double sum = 0.0;
    for (double p : r.per_hop_p) sum += -std::log(p);
    CHECK(r.total_cost == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("no route when everything is pruned") {
    ChannelGraph g;
    for (char c : {'a', 'b', 'c'}) g.add_node({nid(c), {}, ""});
    add_p_channel(g, "1", nid('a'), nid('b'), 0.5, 0.5, 100'000);
    RoutingResult r = find_path(g, edge_costs(g, heuristic(), 90'000),
                                {nid('a'), nid('b'), 90'000});
    CHECK_FALSE(r.found);
    CHECK(r.path.empty());
    // Disconnected destination.
    RoutingResult r2 = find_path(g, edge_costs(g, heuristic(), 10'000),
                                 {nid('a'), nid('c'), 10'000});
    CHECK_FALSE(r2.found);
}

TEST_CASE("query validation") {
    ChannelGraph g = triangle();
    std::map<DirectedEdge, double> costs;
    CHECK_THROWS_AS(find_path(g, costs, {nid('z'), nid('a'), 10}), DataError);
    CHECK_THROWS_AS(find_path(g, costs, {nid('a'), nid('z'), 10}), DataError);
    CHECK_THROWS_AS(find_path(g, costs, {nid('a'), nid('a'), 10}), UsageError);
    CHECK_THROWS_AS(find_path(g, costs, {nid('a'), nid('b'), 0}), UsageError);
    CHECK_THROWS_AS(find_path(g, costs, {nid('a'), nid('b'), -5}), UsageError);
}

TEST_CASE("Dijkstra agrees with exhaustive enumeration on random small graphs") {
    static const char* hex = "0123456789abcdef";
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng() % 7);  // 2..8 nodes
        ChannelGraph g;
        std::vector<NodeId> ids;
        for (int i = 0; i < n; ++i) {
            ids.push_back(nid(hex[i]));
            g.add_node({ids.back(), {}, ""});
        }
        std::map<DirectedEdge, double> costs;
        int cid = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (u(rng) > 0.5) continue;
                std::string id = std::to_string(++cid);
                add_simple_channel(g, id, ids[i], ids[j]);
                // Independently prune each direction to exercise asymmetry.
                if (u(rng) < 0.85) costs.emplace(DirectedEdge{ids[i], ids[j], id}, 2.0 * u(rng));
                if (u(rng) < 0.85) costs.emplace(DirectedEdge{ids[j], ids[i], id}, 2.0 * u(rng));
            }
        double best = std::numeric_limits<double>::infinity();
        bool found = false;
        std::set<NodeId> visited{ids[0]};
        enumerate_paths(g, costs, ids[0], ids[1], visited, 0.0, best, found);
        RoutingResult r = find_path(g, costs, {ids[0], ids[1], 1});
        CHECK(r.found == found);
        if (found) CHECK(r.total_cost == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("simulation") {
    // Fully labeled triangle: balances give the oracle exact knowledge.
    ChannelGraph g = triangle();
    g.add_label({nid('a'), nid('b'), "1"}, 700'000);
    g.add_label({nid('b'), nid('a'), "1"}, 300'000);
    g.add_label({nid('b'), nid('c'), "2"}, 500'000);
    g.add_label({nid('c'), nid('b'), "2"}, 500'000);
    g.add_label({nid('a'), nid('c'), "3"}, 200'000);
    g.add_label({nid('c'), nid('a'), "3"}, 800'000);

    SUBCASE("oracle needs at most one attempt per success on static balances") {
        SimConfig cfg;
        cfg.n_payments = 200;
        cfg.rng_seed = 7;
        SimReport rep = simulate(g, {{"oracle", nullptr}}, cfg);
        REQUIRE(rep.estimators.size() == 1);
        const SimEstimatorReport& er = rep.estimators[0];
        CHECK(er.n_success > 0);
        // Every success lands in the attempts==1 bucket.
        CHECK(er.attempts_histogram[0] == er.n_success);
        for (std::size_t i = 1; i < er.attempts_histogram.size(); ++i)
            CHECK(er.attempts_histogram[i] == 0);
    }
    SUBCASE("amounts above every capacity never succeed") {
        SimConfig cfg;
        cfg.n_payments = 50;
        cfg.amount_log_mean = 25.0;  // ~7e10 sat, far beyond the 1M sat channels
        cfg.amount_log_sigma = 0.01;
        cfg.rng_seed = 3;
        SimReport rep = simulate(g, {{"oracle", nullptr}, {"capacity", nullptr}}, cfg);
        for (const auto& er : rep.estimators) {
            CHECK(er.n_success == 0);
            CHECK(er.success_rate == 0.0);
            CHECK(er.mean_attempts == doctest::Approx(cfg.max_retries));
        }
    }
    SUBCASE("reruns with one seed are identical") {
        SimConfig cfg;
        cfg.n_payments = 100;
        cfg.rng_seed = 11;
        cfg.shift_balances = true;
        Estimator eq;
        SimReport a = simulate(g, {{"oracle", nullptr}, {"equal-split", &eq}}, cfg);
        SimReport b = simulate(g, {{"oracle", nullptr}, {"equal-split", &eq}}, cfg);
        REQUIRE(a.estimators.size() == b.estimators.size());
        for (std::size_t i = 0; i < a.estimators.size(); ++i) {
            CHECK(a.estimators[i].n_success == b.estimators[i].n_success);
            CHECK(a.estimators[i].mean_attempts == b.estimators[i].mean_attempts);
            CHECK(a.estimators[i].attempts_histogram ==
                  b.estimators[i].attempts_histogram);
        }
    }
    SUBCASE("validation") {
        SimConfig cfg;
        cfg.n_payments = 0;
        CHECK_THROWS_AS(simulate(g, {{"oracle", nullptr}}, cfg), UsageError);
        SimConfig ok;
        ok.n_payments = 1;
        CHECK_THROWS_AS(simulate(g, {{"joint", nullptr}}, ok), UsageError);
        ChannelGraph unlabeled = triangle();
        CHECK_THROWS_AS(simulate(unlabeled, {{"oracle", nullptr}}, ok), DataError);
    }
}

TEST_CASE("sim report CSV includes the attempts histogram") {
    ChannelGraph g = triangle();
    g.add_label({nid('a'), nid('b'), "1"}, 700'000);
    g.add_label({nid('b'), nid('a'), "1"}, 300'000);
    g.add_label({nid('b'), nid('c'), "2"}, 500'000);
    g.add_label({nid('c'), nid('b'), "2"}, 500'000);
    g.add_label({nid('a'), nid('c'), "3"}, 200'000);
    g.add_label({nid('c'), nid('a'), "3"}, 800'000);
    SimConfig cfg;
    cfg.n_payments = 20;
    cfg.rng_seed = 2;
    SimReport rep = simulate(g, {{"oracle", nullptr}}, cfg);
    std::string path = temp_path("lnbal_sim.csv");
    save_sim_report(rep, path);
    std::string text = read_file(path);
    CHECK(text.find("estimator,n_payments") != std::string::npos);
    CHECK(text.find("oracle,20,") != std::string::npos);
    CHECK(text.find("attempts_1") != std::string::npos);
}
