#pragma once

// Shared helpers for building tiny graphs in tests.

#include <cstdint>
#include <filesystem>
#include <string>

#include "lnbal/graph.hpp"

namespace lnbal::testing {

// A valid-looking 66-char pubkey whose ordering follows the given hex char.
inline NodeId nid(char c) { return "02" + std::string(64, c); }

inline ChannelPolicy basic_policy(std::int64_t max_htlc_msat = 1'000'000'000,
                                  std::int64_t fee_rate_ppm = 100) {
    ChannelPolicy pol;
    pol.time_lock_delta = 40;
    pol.min_htlc_msat = 1000;
    pol.max_htlc_msat = max_htlc_msat;
    pol.fee_base_msat = 1000;
    pol.fee_rate_ppm = fee_rate_ppm;
    pol.disabled = false;
    return pol;
}

inline void add_simple_channel(ChannelGraph& graph, const std::string& id,
                               const NodeId& a, const NodeId& b,
                               std::int64_t capacity_sat = 1'000'000,
                               bool with_policies = true) {
    Channel ch;
    ch.channel_id = id;
    ch.node_a = a;
    ch.node_b = b;
    ch.capacity_sat = capacity_sat;
    if (with_policies) {
        ch.policy_a_to_b = basic_policy();
        ch.policy_b_to_a = basic_policy();
    }
    graph.add_channel(std::move(ch));
}

// A-B-C-A triangle with equal capacities and policies on every direction.
inline ChannelGraph triangle() {
    ChannelGraph g;
    g.add_node({nid('a'), {}, ""});
    g.add_node({nid('b'), {}, ""});
    g.add_node({nid('c'), {}, ""});
    add_simple_channel(g, "1", nid('a'), nid('b'));
    add_simple_channel(g, "2", nid('b'), nid('c'));
    add_simple_channel(g, "3", nid('a'), nid('c'));
    return g;
}

inline std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace lnbal::testing
