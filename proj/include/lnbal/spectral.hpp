#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lnbal/graph.hpp"

namespace lnbal {

struct PositionalTable {
    int k = 0;
    std::map<NodeId, std::vector<double>> vectors;  // isolated nodes map to zeros
    std::vector<double> eigenvalues;                // ascending, all > 1e-9
};

enum class EigenSolver { Auto, Dense, Iterative };  // Auto: dense below 500 nodes

struct SpectralOptions {
    EigenSolver solver = EigenSolver::Auto;
    bool capacity_weighted = false;  // weight adjacency by channel capacity
};

// Eigenvectors of the k smallest nonzero eigenvalues of the symmetric
// normalized Laplacian L = I - D^{-1/2} A D^{-1/2} over the undirected
// channel skeleton. One zero eigenvalue per connected component is dropped.
// Sign fixed per component: largest-magnitude entry positive, ties broken by
// lowest NodeId.
PositionalTable laplacian_encodings(const ChannelGraph& graph, int k,
                                    std::uint64_t rng_seed,
                                    const SpectralOptions& options = {});

// Cache CSV: header `pub_key,z_0,...,z_{k-1}`.
void save_encodings(const PositionalTable& table, const std::string& path);
PositionalTable load_encodings(const std::string& path);

}  // namespace lnbal
