#include "lnbal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "lnbal/util.hpp"

namespace lnbal {

std::vector<std::string> labeled_channels(const ChannelGraph& graph,
                                          bool include_disabled) {
    std::vector<std::string> out;
    for (const auto& [cid, ch] : graph.channels()) {
        if (!featurizable(graph, ch, include_disabled)) continue;
        if (graph.label({ch.node_a, ch.node_b, cid}) ||
            graph.label({ch.node_b, ch.node_a, cid}))
            out.push_back(cid);
    }
    return out;  // map order, already sorted
}

Folds split(const std::vector<std::string>& channel_ids, const SplitSpec& spec) {
    if (spec.test_fraction <= 0 || spec.test_fraction >= 1 || spec.val_fraction <= 0 ||
        spec.val_fraction >= 1 || spec.test_fraction + spec.val_fraction >= 1)
        throw UsageError("split: fractions must be in (0,1) and sum below 1");
    if (channel_ids.size() < 10) throw DataError("split: fewer than 10 channels");

    std::vector<std::string> shuffled = channel_ids;
    std::sort(shuffled.begin(), shuffled.end());
    std::mt19937_64 rng(spec.rng_seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    const auto n = static_cast<double>(shuffled.size());
    std::size_t n_test = static_cast<std::size_t>(std::llround(n * spec.test_fraction));
    std::size_t n_val = static_cast<std::size_t>(std::llround(n * spec.val_fraction));
    n_test = std::max<std::size_t>(1, n_test);
    n_val = std::max<std::size_t>(1, n_val);
    if (n_test + n_val >= shuffled.size())
        throw DataError("split: folds leave no training channels");

    Folds folds;
    folds.test.assign(shuffled.begin(), shuffled.begin() + n_test);
    folds.val.assign(shuffled.begin() + n_test, shuffled.begin() + n_test + n_val);
    folds.train.assign(shuffled.begin() + n_test + n_val, shuffled.end());
    return folds;
}

Metrics compute_metrics(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw UsageError("compute_metrics: empty input");
    const double n = static_cast<double>(predictions.size());

    Metrics m;
    double sum_p = 0.0, sum_ph = 0.0;
    for (const Prediction& pr : predictions) {
        m.mae_p += std::abs(pr.p - pr.p_hat);
        m.mae_y_sat += std::abs(pr.p - pr.p_hat) * static_cast<double>(pr.capacity_sat);
        sum_p += pr.p;
        sum_ph += pr.p_hat;
    }
    m.mae_p /= n;
    m.mae_y_sat /= n;

    const double mean_p = sum_p / n, mean_ph = sum_ph / n;
    double cov = 0.0, var_p = 0.0, var_ph = 0.0, ss_res = 0.0;
    for (const Prediction& pr : predictions) {
        double dp = pr.p - mean_p, dph = pr.p_hat - mean_ph;
        cov += dp * dph;
        var_p += dp * dp;
        var_ph += dph * dph;
        ss_res += (pr.p - pr.p_hat) * (pr.p - pr.p_hat);
    }
    if (var_p > 0.0 && var_ph > 0.0) {
        m.r = cov / std::sqrt(var_p * var_ph);
        m.r_defined = true;
    }
    if (var_p > 0.0) {
        m.r2 = 1.0 - ss_res / var_p;
        m.r2_defined = true;
    }
    return m;
}

std::vector<FeatureCorrelation> correlation_screen(const std::vector<FeatureRow>& rows,
                                                   const FeatureSchema& schema,
                                                   double threshold) {
    if (rows.size() < 3) throw DataError("correlation_screen: need at least 3 rows");
    const std::size_t d = schema.width();
    const double n = static_cast<double>(rows.size());

    std::vector<FeatureCorrelation> all(d);
    double t_mean = 0.0;
    for (const FeatureRow& row : rows) {
        if (!row.target_p) throw UsageError("correlation_screen: row without target");
        t_mean += *row.target_p;
    }
    t_mean /= n;

    for (std::size_t f = 0; f < d; ++f) {
        double x_mean = 0.0;
        for (const FeatureRow& row : rows) x_mean += row.values[f];
        x_mean /= n;
        double cov = 0.0, var_x = 0.0, var_t = 0.0;
        for (const FeatureRow& row : rows) {
            double dx = row.values[f] - x_mean, dt = *row.target_p - t_mean;
            cov += dx * dt;
            var_x += dx * dx;
            var_t += dt * dt;
        }
        all[f].name = schema.columns[f].first;
        if (var_x > 0.0 && var_t > 0.0) {
            all[f].r = cov / std::sqrt(var_x * var_t);
            all[f].defined = true;
        }
    }

    std::vector<FeatureCorrelation> out;
    for (const auto& fc : all)
        if (std::abs(fc.r) > threshold) out.push_back(fc);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (std::abs(a.r) != std::abs(b.r)) return std::abs(a.r) > std::abs(b.r);
        return a.name < b.name;
    });
    return out;
}

ConfusionCounts confusion_at_half(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw UsageError("confusion_at_half: empty input");
    ConfusionCounts counts{};
    for (const Prediction& pr : predictions) {
        int actual = pr.p <= 0.5 ? 0 : 1;
        int predicted = pr.p_hat <= 0.5 ? 0 : 1;
        ++counts[actual][predicted];
    }
    return counts;
}

namespace {

constexpr EstimatorKind kRoster[] = {
    EstimatorKind::EqualSplit,   EstimatorKind::LocalMaxHtlc,
    EstimatorKind::RandomEdge,   EstimatorKind::NodeWise,
    EstimatorKind::EdgeWise,     EstimatorKind::Concatenated,
    EstimatorKind::Shallow,      EstimatorKind::Joint,
};

std::string fmt_metric(double v, bool defined) {
    if (!defined) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

}  // namespace

std::string render_table(const std::vector<EvalReport>& reports) {
    std::ostringstream ss;
    ss << std::left << std::setw(16) << "model" << std::right << std::setw(10) << "mae_p"
       << std::setw(14) << "mae_y_sat" << std::setw(10) << "r" << std::setw(10) << "r2"
       << std::setw(8) << "n" << "\n";
    for (const EvalReport& rep : reports) {
        ss << std::left << std::setw(16) << to_string(rep.kind) << std::right
           << std::setw(10) << fmt_metric(rep.metrics.mae_p, true) << std::setw(14)
           << std::fixed << std::setprecision(1) << rep.metrics.mae_y_sat << std::setw(10)
           << fmt_metric(rep.metrics.r, rep.metrics.r_defined) << std::setw(10)
           << fmt_metric(rep.metrics.r2, rep.metrics.r2_defined) << std::setw(8)
           << rep.n_test << "\n";
    }
    return ss.str();
}

std::vector<EvalReport> run_benchmark(const ChannelGraph& graph,
                                      const BenchmarkConfig& config,
                                      const std::string& out_dir) {
    SplitSpec spec = config.split_spec;
    spec.rng_seed = derive_seed(config.rng_seed, "split");
    auto channels = labeled_channels(graph, config.include_disabled);
    Folds folds = split(channels, spec);
    std::set<std::string> train_set(folds.train.begin(), folds.train.end());
    std::set<std::string> val_set(folds.val.begin(), folds.val.end());

    // Test-edge ground truth, fixed across estimators.
    struct TestEdge {
        DirectedEdge edge;
        double p;
        std::int64_t capacity_sat;
    };
    std::vector<TestEdge> test_edges;
    std::vector<std::string> test_sorted = folds.test;
    std::sort(test_sorted.begin(), test_sorted.end());
    for (const std::string& cid : test_sorted) {
        const Channel& ch = graph.channel(cid);
        for (const DirectedEdge& e : {DirectedEdge{ch.node_a, ch.node_b, cid},
                                      DirectedEdge{ch.node_b, ch.node_a, cid}}) {
            const BalanceLabel* l = graph.label(e);
            const BalanceLabel* rev = graph.label({e.dst, e.src, cid});
            if (l)
                test_edges.push_back({e, l->p, ch.capacity_sat});
            else if (rev)
                test_edges.push_back({e, 1.0 - rev->p, ch.capacity_sat});
        }
    }

    auto evaluate_estimator = [&](const Estimator& est) {
        EvalReport rep;
        rep.kind = est.kind;
        std::vector<Prediction> preds;
        std::map<std::string, std::vector<double>> per_channel;  // defined p_hats
        for (const TestEdge& te : test_edges) {
            auto p_hat = est.predict_edge(graph, te.edge);
            if (!p_hat) continue;  // undefined predictions excluded from metrics
            preds.push_back({*p_hat, te.p, te.capacity_sat});
            per_channel[te.edge.channel_id].push_back(*p_hat);
        }
        if (preds.empty()) throw DataError("no defined predictions on test fold");
        rep.metrics = compute_metrics(preds);
        rep.n_test = preds.size();
        rep.confusion = confusion_at_half(preds);
        double gap = 0.0;
        std::size_t gap_n = 0;
        for (const auto& [cid, ps] : per_channel) {
            if (ps.size() != 2) continue;
            gap += std::abs(ps[0] + ps[1] - 1.0);
            ++gap_n;
        }
        rep.antisymmetry_gap = gap_n ? gap / static_cast<double>(gap_n) : 0.0;
        if (est.forest) {
            for (std::size_t f = 0; f < est.forest->schema.width(); ++f)
                rep.mdi.emplace_back(est.forest->schema.columns[f].first,
                                     est.forest->mdi[f]);
        }
        return std::make_pair(rep, preds);
    };

    // Validation MAE_p, used only when tuning is enabled.
    auto validation_mae = [&](const Estimator& est) {
        std::vector<Prediction> preds;
        for (const std::string& cid : val_set) {
            const Channel& ch = graph.channel(cid);
            for (const DirectedEdge& e : {DirectedEdge{ch.node_a, ch.node_b, cid},
                                          DirectedEdge{ch.node_b, ch.node_a, cid}}) {
                const BalanceLabel* l = graph.label(e);
                const BalanceLabel* rev = graph.label({e.dst, e.src, cid});
                if (!l && !rev) continue;
                double p = l ? l->p : 1.0 - rev->p;
                auto p_hat = est.predict_edge(graph, e);
                if (p_hat) preds.push_back({*p_hat, p, ch.capacity_sat});
            }
        }
        return preds.empty() ? 1.0 : compute_metrics(preds).mae_p;
    };

    std::vector<EvalReport> reports;
    std::vector<Prediction> joint_preds;
    std::vector<std::pair<std::string, double>> joint_mdi;
    for (EstimatorKind kind : kRoster) {
        Estimator est;
        if (is_forest_kind(kind)) {
            TrainOptions opts;
            opts.forest = config.forest;
            opts.k_pe = config.k_pe;
            opts.include_disabled = config.include_disabled;
            opts.channel_filter = train_set;
            opts.rng_seed = derive_seed(config.rng_seed, "train-" + to_string(kind));
            if (config.tune) {
                double best = std::numeric_limits<double>::infinity();
                for (int leaf : {1, 2, 5, 10}) {
                    TrainOptions probe = opts;
                    probe.forest.min_samples_leaf = leaf;
                    Estimator cand = train_variant(kind, graph, probe);
                    double mae = validation_mae(cand);
                    if (mae < best) {
                        best = mae;
                        est = std::move(cand);
                    }
                }
            } else {
                est = train_variant(kind, graph, opts);
            }
        } else {
            est.kind = kind;
            est.include_disabled = config.include_disabled;
        }
        auto [rep, preds] = evaluate_estimator(est);
        if (kind == EstimatorKind::Joint) {
            joint_preds = preds;
            joint_mdi = rep.mdi;
        }
        reports.push_back(std::move(rep));
    }

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::string csv = "model,mae_p,mae_y_sat,r,r2,n_test,antisymmetry_gap\n";
        for (const EvalReport& rep : reports) {
            csv += to_string(rep.kind) + "," + format_double(rep.metrics.mae_p) + "," +
                   format_double(rep.metrics.mae_y_sat) + "," +
                   (rep.metrics.r_defined ? format_double(rep.metrics.r) : "-") + "," +
                   (rep.metrics.r2_defined ? format_double(rep.metrics.r2) : "-") + "," +
                   std::to_string(rep.n_test) + "," +
                   format_double(rep.antisymmetry_gap) + "\n";
        }
        write_file(out_dir + "/results.csv", csv);
        write_file(out_dir + "/results.txt", render_table(reports));

        // Error histogram of the joint model, binned in [-1, 1].
        constexpr int kBins = 40;
        std::array<std::size_t, kBins> bins{};
        for (const Prediction& pr : joint_preds) {
            double err = pr.p_hat - pr.p;
            int b = static_cast<int>((err + 1.0) / 2.0 * kBins);
            b = std::clamp(b, 0, kBins - 1);
            ++bins[b];
        }
        std::string hist = "bin_low,bin_high,count\n";
        for (int b = 0; b < kBins; ++b) {
            double lo = -1.0 + 2.0 * b / kBins, hi = -1.0 + 2.0 * (b + 1) / kBins;
            hist += format_double(lo) + "," + format_double(hi) + "," +
                    std::to_string(bins[b]) + "\n";
        }
        write_file(out_dir + "/histogram.csv", hist);

        std::string scatter = "p,p_hat\n";
        for (const Prediction& pr : joint_preds)
            scatter += format_double(pr.p) + "," + format_double(pr.p_hat) + "\n";
        write_file(out_dir + "/scatter.csv", scatter);

        std::string mdi = "feature,importance\n";
        for (const auto& [name, v] : joint_mdi)
            mdi += name + "," + format_double(v) + "\n";
        write_file(out_dir + "/mdi.csv", mdi);

        std::string conf =
            "model,actual_le_half_pred_le_half,actual_le_half_pred_gt_half,"
            "actual_gt_half_pred_le_half,actual_gt_half_pred_gt_half\n";
        for (const EvalReport& rep : reports) {
            conf += to_string(rep.kind);
            for (int a = 0; a < 2; ++a)
                for (int p = 0; p < 2; ++p)
                    conf += "," + std::to_string(rep.confusion[a][p]);
            conf += "\n";
        }
        write_file(out_dir + "/confusion.csv", conf);
    }
    return reports;
}

}  // namespace lnbal
