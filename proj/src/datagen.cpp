#include "lnbal/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "lnbal/spectral.hpp"
#include "lnbal/util.hpp"

namespace lnbal {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double pos = q * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, n - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double beta_draw(std::mt19937_64& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    double x = ga(rng), y = gb(rng);
    return x / (x + y);
}

std::string random_pubkey(std::mt19937_64& rng) {
    static const char* hex = "0123456789abcdef";
    std::string id = "02";
    std::uniform_int_distribution<int> d(0, 15);
    for (int i = 0; i < 64; ++i) id += hex[d(rng)];
    return id;
}

// Weight of the structural (positional) component in balances, relative to
// signal_strength.
constexpr double kStructuralWeight = 0.5;

}  // namespace

void validate(const SynthConfig& c) {
    if (c.n_nodes < 2) throw UsageError("synth: n_nodes must be >= 2");
    if (c.attach_m < 1) throw UsageError("synth: attachment parameter must be >= 1");
    if (c.attach_m >= c.n_nodes)
        throw UsageError("synth: attachment parameter must be < n_nodes");
    if (c.capacity_log_sigma < 0) throw UsageError("synth: capacity sigma must be >= 0");
    if (c.depleted_fraction < 0 || c.depleted_fraction > 1)
        throw UsageError("synth: depleted_fraction must be in [0,1]");
    if (c.signal_strength < 0 || c.signal_strength > 1)
        throw UsageError("synth: signal_strength must be in [0,1]");
}

std::int64_t kde_sample(const BalanceSeries& series, std::uint64_t rng_seed) {
    if (series.samples.empty()) throw UsageError("kde_sample: empty series");
    const std::size_t n = series.samples.size();
    std::vector<double> values;
    values.reserve(n);
    for (const auto& [ts, bal] : series.samples)
        values.push_back(static_cast<double>(bal));

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    double sigma = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    // Silverman's rule.
    double spread = std::min(sigma, iqr / 1.34);
    double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double draw = values[pick(rng)];
    if (h > 0.0) {
        std::normal_distribution<double> noise(0.0, h);
        draw += noise(rng);
    }
    draw = std::clamp(draw, 0.0, static_cast<double>(series.capacity_sat));
    return static_cast<std::int64_t>(std::llround(draw));
}

std::vector<BalanceSeries> load_balance_series(const ChannelGraph& graph,
                                               const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty series file: " + path);
    if (split_csv_line(line) !=
        std::vector<std::string>{"channel_id", "src_pub", "timestamp", "balance_sat"})
        throw DataError("series file missing expected header: " + path);

    std::map<std::pair<std::string, NodeId>, BalanceSeries> grouped;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw DataError("series line " + std::to_string(lineno) + ": expected 4 fields");
        const Channel& ch = graph.channel(fields[0]);
        if (fields[1] != ch.node_a && fields[1] != ch.node_b)
            throw DataError("series line " + std::to_string(lineno) +
                            ": src is not an endpoint");
        std::int64_t ts = std::stoll(fields[2]);
        std::int64_t bal = std::stoll(fields[3]);
        if (bal < 0 || bal > ch.capacity_sat)
            throw DataError("series line " + std::to_string(lineno) +
                            ": balance outside [0, capacity]");
        auto key = std::make_pair(fields[0], fields[1]);
        auto& series = grouped[key];
        if (series.samples.empty()) {
            series.edge = {fields[1], fields[1] == ch.node_a ? ch.node_b : ch.node_a,
                           fields[0]};
            series.capacity_sat = ch.capacity_sat;
        }
        if (!series.samples.empty() && ts <= series.samples.back().first)
            throw DataError("series line " + std::to_string(lineno) +
                            ": timestamps not strictly increasing");
        series.samples.emplace_back(ts, bal);
    }
    std::vector<BalanceSeries> out;
    out.reserve(grouped.size());
    for (auto& [key, series] : grouped) out.push_back(std::move(series));
    return out;
}

ChannelGraph generate_synthetic(const SynthConfig& config) {
    validate(config);
    std::mt19937_64 rng(config.rng_seed);

    const int n = config.n_nodes;
    const int m = config.attach_m;

    std::vector<NodeId> ids;
    ids.reserve(n);
    std::set<NodeId> unique_ids;
    while (static_cast<int>(ids.size()) < n) {
        NodeId id = random_pubkey(rng);
        if (unique_ids.insert(id).second) ids.push_back(id);
    }

    // Preferential attachment; repeated endpoints in this list encode degree.
    std::vector<std::pair<int, int>> pairs;  // (node index, node index)
    std::vector<int> endpoint_pool;
    for (int v = 1; v < n; ++v) {
        int links = std::min(v, m);
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < links) {
            int t;
            if (endpoint_pool.empty()) {
                t = 0;
            } else {
                std::uniform_int_distribution<std::size_t> d(0, endpoint_pool.size() - 1);
                t = endpoint_pool[d(rng)];
            }
            if (t < v) targets.insert(t);
        }
        for (int t : targets) {
            pairs.emplace_back(v, t);
            endpoint_pool.push_back(v);
            endpoint_pool.push_back(t);
        }
    }

    std::lognormal_distribution<double> cap_dist(config.capacity_log_mean,
                                                 config.capacity_log_sigma);
    std::vector<std::int64_t> capacities;
    capacities.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double cap = cap_dist(rng);
        capacities.push_back(std::max<std::int64_t>(20'000, std::llround(cap)));
    }

    // Feature bits: a handful of plausible flags, wumbo (19) included.
    static const int kBits[] = {0, 5, 7, 9, 12, 14, 19, 23, 27};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::set<int>> node_bits(n);
    for (int v = 0; v < n; ++v)
        for (int bit : kBits)
            if (unit(rng) < 0.4) node_bits[v].insert(bit);

    // Topology-only graph for the structural balance component.
    ChannelGraph skeleton;
    for (int v = 0; v < n; ++v) skeleton.add_node({ids[v], node_bits[v], ""});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        Channel ch;
        ch.channel_id = std::to_string(100000 + i);
        ch.node_a = ids[pairs[i].first];
        ch.node_b = ids[pairs[i].second];
        ch.capacity_sat = capacities[i];
        skeleton.add_channel(std::move(ch));
    }

    // Structural drain score per node: rank-normalized Fiedler component.
    std::map<NodeId, double> drain;
    {
        PositionalTable pt = laplacian_encodings(skeleton, 1, config.rng_seed);
        std::vector<std::pair<double, NodeId>> order;
        for (const auto& [id, vec] : pt.vectors) order.emplace_back(vec[0], id);
        std::sort(order.begin(), order.end());
        for (std::size_t r = 0; r < order.size(); ++r)
            drain[order[r].second] =
                static_cast<double>(r) / static_cast<double>(order.size() - 1) - 0.5;
    }

    ChannelGraph graph;
    for (int v = 0; v < n; ++v) graph.add_node({ids[v], node_bits[v], ""});

    std::uniform_int_distribution<int> tld_pick(0, 2);
    static const int kTimeLocks[] = {40, 80, 144};
    std::uniform_int_distribution<std::int64_t> fee_base(0, 1000);
    std::uniform_int_distribution<std::int64_t> fee_rate(1, 2000);

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const NodeId& a = ids[pairs[i].first];
        const NodeId& b = ids[pairs[i].second];
        const std::int64_t cap = capacities[i];

        double p_base;
        if (unit(rng) < config.depleted_fraction) {
            double q = beta_draw(rng, 0.5, 12.0);
            p_base = unit(rng) < 0.5 ? q : 1.0 - q;
        } else {
            p_base = unit(rng);
        }
        // Structural shift damped quadratically toward the boundaries so
        // depleted channels stay depleted.
        double shift = kStructuralWeight * config.signal_strength *
                       (drain.at(a) - drain.at(b));
        double damp = 2.0 * std::min(p_base, 1.0 - p_base);
        double p = std::clamp(p_base + shift * damp * damp, 0.0, 1.0);

        std::int64_t y_a = std::llround(p * static_cast<double>(cap));
        y_a = std::clamp<std::int64_t>(y_a, 0, cap);

        auto make_policy = [&](double p_dir) {
            ChannelPolicy pol;
            pol.time_lock_delta = kTimeLocks[tld_pick(rng)];
            pol.min_htlc_msat = 1000;
            double u = unit(rng);
            double frac =
                (1.0 - config.signal_strength) * u + config.signal_strength * p_dir;
            pol.max_htlc_msat = std::clamp<std::int64_t>(
                std::llround(frac * static_cast<double>(cap) * 1000.0), 1000,
                cap * 1000);
            pol.fee_base_msat = fee_base(rng);
            pol.fee_rate_ppm = fee_rate(rng);
            pol.disabled = false;
            return pol;
        };

        Channel ch;
        ch.channel_id = std::to_string(100000 + i);
        ch.node_a = a;
        ch.node_b = b;
        ch.capacity_sat = cap;
        // Policies encode the pre-shift balance component; the structural part
        // of p is only visible through graph position.
        ch.policy_a_to_b = make_policy(p_base);
        ch.policy_b_to_a = make_policy(1.0 - p_base);
        graph.add_channel(std::move(ch));  // canonicalizes endpoint order
        graph.add_label({a, b, std::to_string(100000 + i)}, y_a);
        graph.add_label({b, a, std::to_string(100000 + i)}, cap - y_a);
    }
    return graph;
}

void save_ground_truth(const ChannelGraph& graph, const std::string& path) {
    std::string out = "channel_id,src_pub,p\n";
    for (const auto& [edge, label] : graph.labels()) {
        out += edge.channel_id + "," + edge.src + "," + format_double(label.p) + "\n";
    }
    write_file(path, out);
}

}  // namespace lnbal
