#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "lnbal/forest.hpp"

using namespace lnbal;
using namespace lnbal::testing;

namespace {

FeatureSchema plain_schema(int d) {
    FeatureSchema schema;
    for (int i = 0; i < d; ++i)
        schema.columns.emplace_back("f" + std::to_string(i), FeatureSource::Edge);
    return schema;
}

std::vector<FeatureRow> make_rows(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>& y) {
    std::vector<FeatureRow> rows;
    for (std::size_t i = 0; i < x.size(); ++i)
        rows.push_back({DirectedEdge{nid('a'), nid('b'), std::to_string(i)}, x[i], y[i]});
    return rows;
}

// Exhaustive best split: scan every feature and every midpoint of consecutive
// distinct sorted values; score = SSE decrease; ties resolved to the lowest
// feature index, then the lowest threshold.
struct OracleSplit {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
};

OracleSplit exhaustive_best_split(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>& y, int min_leaf) {
    const std::size_t n = x.size();
    const int d = static_cast<int>(x[0].size());
    OracleSplit best;
    for (int f = 0; f < d; ++f) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < n; ++i) pts.emplace_back(x[i][f], y[i]);
        std::sort(pts.begin(), pts.end());
        for (std::size_t i = 1; i < n; ++i) {
            if (pts[i].first <= pts[i - 1].first) continue;
            double thr = (pts[i - 1].first + pts[i].first) / 2.0;
            double suml = 0, sumr = 0;
            std::size_t nl = 0, nr = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (x[j][f] <= thr) suml += y[j], ++nl;
                else sumr += y[j], ++nr;
            }
            if (nl < static_cast<std::size_t>(min_leaf) ||
                nr < static_cast<std::size_t>(min_leaf))
                continue;
            double total = suml + sumr;
            double score = suml * suml / nl + sumr * sumr / nr - total * total / n;
            if (score > best.score + 1e-15 ||
                (std::abs(score - best.score) <= 1e-15 &&
                 (f < best.feature || (f == best.feature && thr < best.threshold)))) {
                best = {f, thr, score};
            }
        }
    }
    return best;
}

ForestConfig exact_tree_config() {
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.min_samples_leaf = 1;
    cfg.feature_rule = SplitFeatureRule::All;
    cfg.bootstrap = false;
    return cfg;
}

}  // namespace

TEST_CASE("1D staircase: root split lands between 1 and 2") {
    auto rows = make_rows({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    RandomForestModel model = fit(rows, exact_tree_config(), plain_schema(1));
    REQUIRE(model.trees.size() == 1);
    const Tree& t = model.trees[0];
    CHECK(t.feature[0] == 0);
    CHECK(t.threshold[0] > 1.0);
    CHECK(t.threshold[0] <= 2.0);
    CHECK(model.predict({0.0}) == 0.0);
    CHECK(model.predict({3.0}) == 1.0);
}

TEST_CASE("constant targets collapse to a single leaf with uniform MDI") {
    auto rows = make_rows({{0, 5}, {1, 4}, {2, 3}, {3, 2}}, {0.7, 0.7, 0.7, 0.7});
    ForestConfig cfg;
    cfg.n_trees = 10;
    RandomForestModel model = fit(rows, cfg, plain_schema(2));
    CHECK(model.predict({1.5, 3.5}) == doctest::Approx(0.7));
    CHECK(model.predict({-100, 100}) == doctest::Approx(0.7));
    REQUIRE(model.mdi.size() == 2);
    CHECK(model.mdi[0] == doctest::Approx(0.5));  // uniform fallback
    CHECK(model.mdi[1] == doctest::Approx(0.5));
}

TEST_CASE("MDI concentrates on the informative feature") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 300; ++i) {
        double signal = u(rng), noise = u(rng);
        x.push_back({signal, noise});
        y.push_back(signal);
    }
    ForestConfig cfg;
    cfg.n_trees = 200;
    cfg.feature_rule = SplitFeatureRule::All;
    RandomForestModel model = fit(make_rows(x, y), cfg, plain_schema(2));
    CHECK(model.mdi[0] > 0.9);
    CHECK(model.mdi[0] + model.mdi[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.mdi[1] >= 0.0);
}

TEST_CASE("full-depth unbagged forest memorizes distinct rows") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 100; ++i) {
        x.push_back({u(rng), u(rng), u(rng)});
        y.push_back(u(rng));
    }
    auto rows = make_rows(x, y);
    ForestConfig cfg = exact_tree_config();
    cfg.n_trees = 3;
    RandomForestModel model = fit(rows, cfg, plain_schema(3));
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(model.predict(rows[i].values) == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("root split equals the exhaustive oracle on random datasets") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> nd(10, 200), dd(1, 5), vd(2, 6);
        int n = nd(rng), d = dd(rng), distinct = vd(rng);
        std::uniform_int_distribution<int> val(0, distinct - 1);
        std::uniform_real_distribution<double> yv(0.0, 1.0);
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        for (int i = 0; i < n; ++i) {
            std::vector<double> row;
            for (int f = 0; f < d; ++f) row.push_back(val(rng));
            x.push_back(row);
            y.push_back(yv(rng));
        }
        OracleSplit oracle = exhaustive_best_split(x, y, 1);
        RandomForestModel model = fit(make_rows(x, y), exact_tree_config(),
                                      plain_schema(d));
        const Tree& t = model.trees[0];
        if (oracle.feature < 0) {
            CHECK(t.feature[0] == -1);
        } else {
            CHECK(t.feature[0] == oracle.feature);
            CHECK(t.threshold[0] == doctest::Approx(oracle.threshold).epsilon(1e-12));
        }
    }
}

TEST_CASE("fit rejects bad input") {
    FeatureSchema schema = plain_schema(2);
    CHECK_THROWS_AS(fit({}, ForestConfig{}, schema), UsageError);
    auto rows = make_rows({{0, 1}, {1, 2}}, {0.2, 0.8});
    rows[1].values.pop_back();
    CHECK_THROWS_AS(fit(rows, ForestConfig{}, schema), UsageError);
    auto rows2 = make_rows({{0, 1}, {1, 2}}, {0.2, 0.8});
    rows2[0].target_p.reset();
    CHECK_THROWS_AS(fit(rows2, ForestConfig{}, schema), UsageError);
    ForestConfig bad;
    bad.n_trees = 0;
    CHECK_THROWS_AS(fit(make_rows({{0, 1}, {1, 2}}, {0.2, 0.8}), bad, schema),
                    UsageError);
}

TEST_CASE("predict validates width and clamps corrupted leaves") {
    auto rows = make_rows({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    RandomForestModel model = fit(rows, exact_tree_config(), plain_schema(1));
    CHECK_THROWS_AS(model.predict({1.0, 2.0}), UsageError);
    // A corrupted model file is the only way to a leaf outside [0,1].
    model.trees[0].value.assign(model.trees[0].value.size(), 1.3);
    CHECK(model.predict({0.0}) == 1.0);
    model.trees[0].value.assign(model.trees[0].value.size(), -0.5);
    CHECK(model.predict({0.0}) == 0.0);
}

TEST_CASE("mtry rules") {
    ForestConfig cfg;
    cfg.feature_rule = SplitFeatureRule::Third;
    CHECK(cfg.resolve_mtry(9) == 3);
    CHECK(cfg.resolve_mtry(10) == 4);  // ceil(10/3)
    CHECK(cfg.resolve_mtry(1) == 1);
    cfg.feature_rule = SplitFeatureRule::Sqrt;
    CHECK(cfg.resolve_mtry(9) == 3);
    CHECK(cfg.resolve_mtry(10) == 4);  // ceil(sqrt(10))
    cfg.feature_rule = SplitFeatureRule::All;
    CHECK(cfg.resolve_mtry(7) == 7);
    cfg.feature_rule = SplitFeatureRule::Explicit;
    cfg.features_per_split = 3;
    CHECK(cfg.resolve_mtry(7) == 3);
}

TEST_CASE("serialization round trip is lossless") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 120; ++i) {
        x.push_back({u(rng), u(rng), u(rng)});
        y.push_back(u(rng) < 0.5 ? x.back()[0] : u(rng));
    }
    ForestConfig cfg;
    cfg.n_trees = 25;
    RandomForestModel model = fit(make_rows(x, y), cfg, plain_schema(3));
    std::string path = temp_path("lnbal_forest.json");
    save_model(model, path);
    RandomForestModel back = load_model(path);
    CHECK(back.schema.hash() == model.schema.hash());
    CHECK(back.mdi == model.mdi);
    std::mt19937_64 rng2(16);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> row{u(rng2) * 2 - 0.5, u(rng2), u(rng2) * 3};
        CHECK(back.predict(row) == model.predict(row));
    }
}

TEST_CASE("corrupt model files are rejected") {
    auto rows = make_rows({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    RandomForestModel model = fit(rows, exact_tree_config(), plain_schema(1));
    std::string text = model_to_json(model);
    CHECK_THROWS_AS(model_from_json(text.substr(0, text.size() / 2)), DataError);
    CHECK_THROWS_AS(model_from_json("{}"), DataError);
    CHECK_THROWS_AS(model_from_json("{\"format\":\"other\"}"), DataError);
}

TEST_CASE("schema hash mismatch between model and file is rejected") {
    auto rows = make_rows({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    RandomForestModel model = fit(rows, exact_tree_config(), plain_schema(1));
    std::string text = model_to_json(model);
    // Tamper with the embedded schema only.
    std::size_t pos = text.find("\"f0\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 4, "\"g0\"");
    CHECK_THROWS_AS(model_from_json(text), DataError);
}

TEST_CASE("determinism: identical configs give identical model bytes") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 150; ++i) {
        x.push_back({u(rng), u(rng)});
        y.push_back(x.back()[0]);
    }
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.rng_seed = 5;
    RandomForestModel a = fit(make_rows(x, y), cfg, plain_schema(2));
    RandomForestModel b = fit(make_rows(x, y), cfg, plain_schema(2));
    CHECK(model_to_json(a) == model_to_json(b));
    cfg.rng_seed = 6;
    RandomForestModel c = fit(make_rows(x, y), cfg, plain_schema(2));
    CHECK(model_to_json(a) != model_to_json(c));
}

TEST_CASE("MDI is equivariant under feature permutation") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> x, x_swapped;
    std::vector<double> y;
    for (int i = 0; i < 200; ++i) {
        double a = u(rng), b = u(rng), c = u(rng);
        x.push_back({a, b, c});
        x_swapped.push_back({c, b, a});  // swap features 0 and 2
        y.push_back(0.7 * a + 0.3 * c);
    }
    ForestConfig cfg;
    cfg.n_trees = 50;
    cfg.feature_rule = SplitFeatureRule::All;
    cfg.bootstrap = false;
    // Large leaves keep split scores distinct; the lowest-index tie-break is
    // deliberately not permutation-symmetric, so exact ties are out of scope.
    cfg.max_depth = 4;
    cfg.min_samples_leaf = 10;
    RandomForestModel m1 = fit(make_rows(x, y), cfg, plain_schema(3));
    RandomForestModel m2 = fit(make_rows(x_swapped, y), cfg, plain_schema(3));
    CHECK(m1.mdi[0] == doctest::Approx(m2.mdi[2]).epsilon(1e-9));
    CHECK(m1.mdi[2] == doctest::Approx(m2.mdi[0]).epsilon(1e-9));
    CHECK(m1.mdi[1] == doctest::Approx(m2.mdi[1]).epsilon(1e-9));
}
