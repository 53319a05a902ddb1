#include "lnbal/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lnbal/util.hpp"

namespace lnbal {

using nlohmann::json;

int ForestConfig::resolve_mtry(int n_features) const {
    int mtry;
    switch (feature_rule) {
        case SplitFeatureRule::Third:
            mtry = (n_features + 2) / 3;
            break;
        case SplitFeatureRule::Sqrt:
            mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
            break;
        case SplitFeatureRule::All:
            mtry = n_features;
            break;
        case SplitFeatureRule::Explicit:
            mtry = features_per_split;
            break;
        default:
            throw InternalError("bad feature rule");
    }
    return std::clamp(mtry, 1, n_features);
}

double Tree::predict(const std::vector<double>& row) const {
    int node = 0;
    while (feature[node] >= 0)
        node = row[feature[node]] <= threshold[node] ? left[node] : right[node];
    return value[node];
}

double RandomForestModel::predict(const std::vector<double>& row) const {
    if (row.size() != schema.width())
        throw UsageError("predict: row width does not match model schema");
    if (trees.empty()) throw InternalError("predict: empty forest");
    double sum = 0.0;
    for (const Tree& t : trees) sum += t.predict(row);
    return std::clamp(sum / static_cast<double>(trees.size()), 0.0, 1.0);
}

namespace {

struct TreeBuilder {
    // Column-major feature matrix shared across trees.
    const std::vector<std::vector<double>>& columns;
    const std::vector<double>& targets;
    const ForestConfig& config;
    int mtry;
    std::mt19937_64 rng;
    Tree tree;
    std::vector<double> mdi;  // SSE decrease per feature

    std::vector<std::size_t> indices;          // current sample ordering
    std::vector<std::pair<double, double>> scratch;  // (x, y) sort buffer

    int n_features() const { return static_cast<int>(columns.size()); }

    int grow(std::size_t begin, std::size_t end, int depth) {
        const std::size_t n = end - begin;
        double sum = 0.0, sumsq = 0.0;
        double y_min = targets[indices[begin]], y_max = y_min;
        for (std::size_t i = begin; i < end; ++i) {
            double y = targets[indices[i]];
            sum += y;
            sumsq += y * y;
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
        const double mean = sum / static_cast<double>(n);

        auto make_leaf = [&]() {
            int id = static_cast<int>(tree.feature.size());
            tree.feature.push_back(-1);
            tree.threshold.push_back(0.0);
            tree.left.push_back(-1);
            tree.right.push_back(-1);
            tree.value.push_back(mean);
            return id;
        };

        bool depth_stop = config.max_depth && depth >= *config.max_depth;
        if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf) || depth_stop ||
            y_min == y_max)
            return make_leaf();

        // Fresh random feature subset per node, examined in ascending index
        // order so score ties resolve to the lowest feature index.
        std::vector<int> subset(n_features());
        std::iota(subset.begin(), subset.end(), 0);
        for (int i = 0; i < mtry; ++i) {
            std::uniform_int_distribution<int> d(i, n_features() - 1);
            std::swap(subset[i], subset[d(rng)]);
        }
        subset.resize(mtry);
        std::sort(subset.begin(), subset.end());

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = -1.0;  // sumL^2/nL + sumR^2/nR - sum^2/n, always >= 0
        const double parent_score = sum * sum / static_cast<double>(n);

        scratch.resize(n);
        for (int f : subset) {
            const std::vector<double>& col = columns[f];
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t row = indices[begin + i];
                scratch[i] = {col[row], targets[row]};
            }
            std::sort(scratch.begin(), scratch.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                left_sum += scratch[i - 1].second;
                if (scratch[i].first <= scratch[i - 1].first) continue;
                if (i < static_cast<std::size_t>(config.min_samples_leaf) ||
                    n - i < static_cast<std::size_t>(config.min_samples_leaf))
                    continue;
                double right_sum = sum - left_sum;
                double score = left_sum * left_sum / static_cast<double>(i) +
                               right_sum * right_sum / static_cast<double>(n - i) -
                               parent_score;
                if (score > best_score) {
                    best_score = score;
                    best_feature = f;
                    // Midpoint of consecutive distinct values; when the two are
                    // adjacent doubles the midpoint can round up to the right
                    // value, which would empty one side of the <= partition.
                    double mid_x = (scratch[i - 1].first + scratch[i].first) / 2.0;
                    best_threshold = mid_x < scratch[i].first ? mid_x : scratch[i - 1].first;
                }
            }
        }
        if (best_feature < 0 || best_score <= 0.0) return make_leaf();

        mdi[best_feature] += best_score;  // == SSE(parent) - SSE(children)

        auto mid = std::stable_partition(
            indices.begin() + begin, indices.begin() + end,
            [&](std::size_t row) { return columns[best_feature][row] <= best_threshold; });
        std::size_t split = static_cast<std::size_t>(mid - indices.begin());
        if (split == begin || split == end)
            throw InternalError("degenerate split partition: feature " +
                                std::to_string(best_feature) + " threshold " +
                                format_double(best_threshold) + " n " + std::to_string(n) +
                                " split " + std::to_string(split - begin));

        int id = static_cast<int>(tree.feature.size());
        tree.feature.push_back(best_feature);
        tree.threshold.push_back(best_threshold);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(mean);
        int l = grow(begin, split, depth + 1);
        int r = grow(split, end, depth + 1);
        tree.left[id] = l;
        tree.right[id] = r;
        return id;
    }
};

}  // namespace

RandomForestModel fit(const std::vector<FeatureRow>& rows, const ForestConfig& config,
                      const FeatureSchema& schema) {
    if (rows.size() < 2) throw UsageError("fit: need at least 2 rows");
    if (config.n_trees < 1) throw UsageError("fit: n_trees must be >= 1");
    if (config.min_samples_leaf < 1) throw UsageError("fit: min_samples_leaf must be >= 1");
    const std::size_t d = schema.width();
    const std::size_t n = rows.size();
    for (const FeatureRow& row : rows) {
        if (row.values.size() != d) throw UsageError("fit: row width mismatch with schema");
        if (!row.target_p) throw UsageError("fit: row without target");
    }
    if (config.feature_rule == SplitFeatureRule::Explicit &&
        (config.features_per_split < 1 ||
         config.features_per_split > static_cast<int>(d)))
        throw UsageError("fit: features_per_split out of range");

    std::vector<std::vector<double>> columns(d, std::vector<double>(n));
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) columns[f][i] = rows[i].values[f];
        targets[i] = *rows[i].target_p;
    }

    RandomForestModel model;
    model.config = config;
    model.schema = schema;
    model.trees.resize(config.n_trees);
    model.mdi.assign(d, 0.0);

    const int mtry = config.resolve_mtry(static_cast<int>(d));
    // Per-tree RNG streams derived from seed + index keep parallel and serial
    // builds identical; with one stream per tree the loop is trivially
    // parallelizable.
    for (int t = 0; t < config.n_trees; ++t) {
        TreeBuilder builder{columns, targets, config, mtry,
                            std::mt19937_64(config.rng_seed + static_cast<std::uint64_t>(t)),
                            {},     {},      {},     {}};
        builder.mdi.assign(d, 0.0);
        builder.indices.resize(n);
        if (config.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (std::size_t i = 0; i < n; ++i) builder.indices[i] = pick(builder.rng);
        } else {
            std::iota(builder.indices.begin(), builder.indices.end(), std::size_t{0});
        }
        builder.grow(0, n, 0);
        model.trees[t] = std::move(builder.tree);
        for (std::size_t f = 0; f < d; ++f) model.mdi[f] += builder.mdi[f];
    }

    double total = std::accumulate(model.mdi.begin(), model.mdi.end(), 0.0);
    if (total > 0.0)
        for (double& v : model.mdi) v /= total;
    else
        for (double& v : model.mdi) v = 1.0 / static_cast<double>(d);  // zero-variance corpus
    return model;
}

namespace {

json tree_to_json(const Tree& t) {
    return json{{"feature", t.feature},
                {"threshold", t.threshold},
                {"left", t.left},
                {"right", t.right},
                {"value", t.value}};
}

Tree tree_from_json(const json& j) {
    Tree t;
    t.feature = j.at("feature").get<std::vector<int>>();
    t.threshold = j.at("threshold").get<std::vector<double>>();
    t.left = j.at("left").get<std::vector<int>>();
    t.right = j.at("right").get<std::vector<int>>();
    t.value = j.at("value").get<std::vector<double>>();
    const std::size_t n = t.feature.size();
    if (t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
        t.value.size() != n || n == 0)
        throw DataError("corrupt tree arrays in model file");
    for (std::size_t i = 0; i < n; ++i) {
        if (t.feature[i] >= 0 &&
            (t.left[i] < 0 || t.right[i] < 0 || t.left[i] >= static_cast<int>(n) ||
             t.right[i] >= static_cast<int>(n)))
            throw DataError("corrupt tree structure in model file");
    }
    return t;
}

const char* rule_name(SplitFeatureRule r) {
    switch (r) {
        case SplitFeatureRule::Third: return "third";
        case SplitFeatureRule::Sqrt: return "sqrt";
        case SplitFeatureRule::All: return "all";
        case SplitFeatureRule::Explicit: return "explicit";
    }
    throw InternalError("bad feature rule enum");
}

SplitFeatureRule rule_from_name(const std::string& s) {
    if (s == "third") return SplitFeatureRule::Third;
    if (s == "sqrt") return SplitFeatureRule::Sqrt;
    if (s == "all") return SplitFeatureRule::All;
    if (s == "explicit") return SplitFeatureRule::Explicit;
    throw DataError("bad feature rule: " + s);
}

}  // namespace

std::string model_to_json(const RandomForestModel& model) {
    json trees = json::array();
    for (const Tree& t : model.trees) trees.push_back(tree_to_json(t));
    json cfg{{"n_trees", model.config.n_trees},
             {"min_samples_leaf", model.config.min_samples_leaf},
             {"feature_rule", rule_name(model.config.feature_rule)},
             {"features_per_split", model.config.features_per_split},
             {"bootstrap", model.config.bootstrap},
             {"rng_seed", model.config.rng_seed}};
    if (model.config.max_depth) cfg["max_depth"] = *model.config.max_depth;
    json doc{{"format", "lnbal-forest"},
             {"version", 1},
             {"config", cfg},
             {"schema", json::parse(schema_to_json(model.schema))},
             {"schema_hash", model.schema.hash()},
             {"trees", trees},
             {"mdi", model.mdi}};
    return doc.dump() + "\n";
}

void save_model(const RandomForestModel& model, const std::string& path) {
    write_file(path, model_to_json(model));
}

RandomForestModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "lnbal-forest")
            throw DataError("not a forest model file");
        if (doc.at("version").get<int>() != 1)
            throw DataError("unsupported model file version");
        RandomForestModel model;
        const json& cfg = doc.at("config");
        model.config.n_trees = cfg.at("n_trees").get<int>();
        model.config.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
        model.config.feature_rule = rule_from_name(cfg.at("feature_rule").get<std::string>());
        model.config.features_per_split = cfg.at("features_per_split").get<int>();
        model.config.bootstrap = cfg.at("bootstrap").get<bool>();
        model.config.rng_seed = cfg.at("rng_seed").get<std::uint64_t>();
        if (cfg.contains("max_depth")) model.config.max_depth = cfg.at("max_depth").get<int>();
        model.schema = schema_from_json(doc.at("schema").dump());
        if (doc.at("schema_hash").get<std::uint64_t>() != model.schema.hash())
            throw DataError("model schema hash mismatch");
        for (const json& jt : doc.at("trees")) model.trees.push_back(tree_from_json(jt));
        model.mdi = doc.at("mdi").get<std::vector<double>>();
        if (model.trees.empty() || model.mdi.size() != model.schema.width())
            throw DataError("corrupt model file: inconsistent sizes");
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
}

RandomForestModel load_model(const std::string& path) {
    return model_from_json(read_file(path));
}

}  // namespace lnbal
