#include "lnbal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "lnbal/util.hpp"

namespace lnbal {

namespace {

// Compressed undirected skeleton over non-isolated nodes.
struct Skeleton {
    std::vector<NodeId> ids;              // sorted, non-isolated
    std::vector<std::vector<std::pair<int, double>>> adj;
    std::vector<double> degree;           // weighted degrees
    int n_components = 0;
};

Skeleton build_skeleton(const ChannelGraph& graph, bool capacity_weighted) {
    Skeleton sk;
    std::map<NodeId, int> index;
    for (const auto& [id, info] : graph.nodes()) {
        if (!graph.adjacency(id).empty()) {
            index.emplace(id, static_cast<int>(sk.ids.size()));
            sk.ids.push_back(id);
        }
    }
    const int n = static_cast<int>(sk.ids.size());
    // Collapse parallel channels into a single weighted entry.
    std::vector<std::map<int, double>> weights(n);
    for (const auto& [cid, ch] : graph.channels()) {
        int a = index.at(ch.node_a), b = index.at(ch.node_b);
        double w = capacity_weighted ? static_cast<double>(ch.capacity_sat) : 1.0;
        if (capacity_weighted)
            weights[a][b] += w, weights[b][a] += w;
        else
            weights[a][b] = 1.0, weights[b][a] = 1.0;
    }
    sk.adj.resize(n);
    sk.degree.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (const auto& [j, w] : weights[i]) {
            sk.adj[i].emplace_back(j, w);
            sk.degree[i] += w;
        }
    }
    // Count components over non-isolated nodes.
    std::vector<int> seen(n, 0);
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++sk.n_components;
        stack.push_back(s);
        seen[s] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (const auto& [v, w] : sk.adj[u])
                if (!seen[v]) seen[v] = 1, stack.push_back(v);
        }
    }
    return sk;
}

// y = L_sym x = x - D^{-1/2} A D^{-1/2} x
Eigen::VectorXd apply_laplacian(const Skeleton& sk, const Eigen::VectorXd& x) {
    const int n = static_cast<int>(sk.ids.size());
    Eigen::VectorXd y = x;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& [j, w] : sk.adj[i])
            acc += w / std::sqrt(sk.degree[i] * sk.degree[j]) * x[j];
        y[i] -= acc;
    }
    return y;
}

struct EigenPairs {
    std::vector<double> values;            // ascending
    std::vector<Eigen::VectorXd> vectors;
};

EigenPairs solve_dense(const Skeleton& sk) {
    const int n = static_cast<int>(sk.ids.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (const auto& [j, w] : sk.adj[i])
            L(i, j) -= w / std::sqrt(sk.degree[i] * sk.degree[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(L);
    if (solver.info() != Eigen::Success)
        throw InternalError("dense eigensolver failed to converge");
    EigenPairs out;
    for (int i = 0; i < n; ++i) {
        out.values.push_back(solver.eigenvalues()[i]);
        out.vectors.push_back(solver.eigenvectors().col(i));
    }
    return out;
}

// Lanczos with full reorthogonalization on B = 2I - L, so the wanted small
// eigenvalues of L become the dominant end of the spectrum. Converged Ritz
// pairs are deflated and the iteration restarts with a fresh random vector;
// the restart is what recovers repeated copies of degenerate eigenvalues,
// which a single Krylov sequence provably cannot see.
EigenPairs solve_lanczos(const Skeleton& sk, int want, std::uint64_t rng_seed) {
    const int n = static_cast<int>(sk.ids.size());
    const double tol = 1e-10;
    std::mt19937_64 rng(rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Eigen::VectorXd> found;  // deflated eigenvectors of B
    std::vector<double> thetas;          // their eigenvalues, harvest order

    while (static_cast<int>(found.size()) < want) {
        const int remaining = n - static_cast<int>(found.size());
        const int need = want - static_cast<int>(found.size());

        std::vector<Eigen::VectorXd> basis;  // orthonormal Lanczos vectors
        std::vector<double> alpha, beta;     // T diagonal / off-diagonal

        auto orthogonalize = [&](Eigen::VectorXd& v) {
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& q : found) v -= q.dot(v) * q;
                for (const auto& q : basis) v -= q.dot(v) * q;
            }
        };
        auto random_unit = [&]() {
            Eigen::VectorXd v(n);
            for (int i = 0; i < n; ++i) v[i] = gauss(rng);
            orthogonalize(v);
            double norm = v.norm();
            if (norm < 1e-12) throw InternalError("lanczos: cannot extend basis");
            return Eigen::VectorXd(v / norm);
        };

        basis.push_back(random_unit());
        int m = std::min(remaining, std::max(2 * need + 40, 60));

        int harvested = 0;
        while (harvested == 0) {
            while (static_cast<int>(alpha.size()) < m) {
                const Eigen::VectorXd& q = basis.back();
                Eigen::VectorXd w = 2.0 * q - apply_laplacian(sk, q);
                alpha.push_back(q.dot(w));
                if (static_cast<int>(alpha.size()) == remaining) break;
                orthogonalize(w);
                double b = w.norm();
                if (b < 1e-12) {
                    beta.push_back(0.0);
                    basis.push_back(random_unit());
                } else {
                    beta.push_back(b);
                    basis.push_back(w / b);
                }
            }
            const int steps = static_cast<int>(alpha.size());
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
            for (int i = 0; i < steps; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < steps) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tsolver(T);
            if (tsolver.info() != Eigen::Success)
                throw InternalError("lanczos: tridiagonal solve failed");

            const bool exact = steps == remaining;
            const double tail =
                beta.size() >= static_cast<std::size_t>(steps) ? beta[steps - 1] : 0.0;
            // Harvest from the top of B's spectrum down to the first
            // unconverged Ritz pair, keeping the global ordering intact.
            for (int r = 0; r < steps && harvested < need; ++r) {
                int col = steps - 1 - r;
                double resid = std::abs(tail * tsolver.eigenvectors()(steps - 1, col));
                if (!exact && resid > tol) break;
                Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
                for (int i = 0; i < steps; ++i)
                    v += tsolver.eigenvectors()(i, col) * basis[i];
                for (const auto& q : found) v -= q.dot(v) * q;
                v.normalize();
                thetas.push_back(tsolver.eigenvalues()[col]);
                found.push_back(std::move(v));
                ++harvested;
            }
            if (harvested == 0) {
                if (exact)
                    throw InternalError("lanczos: exact factorization yielded no pairs");
                m = std::min(remaining, m + std::max(20, m / 2));
            }
        }
    }

    // thetas are descending in B up to tolerance; enforce it, then map back to
    // L's ascending spectrum.
    std::vector<int> order(thetas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return thetas[a] > thetas[b]; });
    EigenPairs out;
    for (int idx : order) {
        out.values.push_back(2.0 - thetas[idx]);
        out.vectors.push_back(std::move(found[idx]));
    }
    return out;
}

}  // namespace

PositionalTable laplacian_encodings(const ChannelGraph& graph, int k,
                                    std::uint64_t rng_seed,
                                    const SpectralOptions& options) {
    if (graph.nodes().empty()) throw UsageError("laplacian_encodings: empty graph");
    if (k < 1 || k >= static_cast<int>(graph.nodes().size()))
        throw UsageError("laplacian_encodings: k must be in [1, n_nodes)");

    Skeleton sk = build_skeleton(graph, options.capacity_weighted);
    const int n = static_cast<int>(sk.ids.size());
    const int want = k + sk.n_components;
    if (want > n)
        throw UsageError("laplacian_encodings: k exceeds available nonzero eigenvalues");

    bool dense = options.solver == EigenSolver::Dense ||
                 (options.solver == EigenSolver::Auto && n < 500);
    EigenPairs pairs = dense ? solve_dense(sk) : solve_lanczos(sk, want, rng_seed);

    PositionalTable table;
    table.k = k;
    std::vector<Eigen::VectorXd> kept;
    for (std::size_t i = 0; i < pairs.values.size() && static_cast<int>(kept.size()) < k;
         ++i) {
        if (pairs.values[i] <= 1e-9) continue;  // one zero per component, dropped
        table.eigenvalues.push_back(pairs.values[i]);
        kept.push_back(std::move(pairs.vectors[i]));
    }
    if (static_cast<int>(kept.size()) < k)
        throw UsageError("laplacian_encodings: graph has fewer than k nonzero eigenvalues");

    // Sign convention: entry of largest magnitude positive; the strict
    // comparison keeps the lowest NodeId on ties since ids are sorted.
    for (auto& v : kept) {
        int arg = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        if (v[arg] < 0) v = -v;
    }

    for (const auto& [id, info] : graph.nodes())
        table.vectors.emplace(id, std::vector<double>(k, 0.0));
    for (int i = 0; i < n; ++i) {
        auto& dst = table.vectors.at(sk.ids[i]);
        for (int c = 0; c < k; ++c) dst[c] = kept[c][i];
    }
    return table;
}

void save_encodings(const PositionalTable& table, const std::string& path) {
    std::string out = "pub_key";
    for (int i = 0; i < table.k; ++i) out += ",z_" + std::to_string(i);
    out += "\n";
    for (const auto& [id, vec] : table.vectors) {
        out += id;
        for (double v : vec) out += "," + format_double(v);
        out += "\n";
    }
    write_file(path, out);
}

PositionalTable load_encodings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open encodings file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty encodings file: " + path);
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "pub_key")
        throw DataError("encodings file missing pub_key header: " + path);
    PositionalTable table;
    table.k = static_cast<int>(header.size()) - 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != table.k + 1)
            throw DataError("encodings row width mismatch in " + path);
        std::vector<double> vec(table.k);
        for (int i = 0; i < table.k; ++i) vec[i] = std::stod(fields[i + 1]);
        table.vectors.emplace(fields[0], std::move(vec));
    }
    return table;
}

}  // namespace lnbal
