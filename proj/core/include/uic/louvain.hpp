#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uic/graph.hpp"

namespace uic {

// Item -> interest assignment with dense cluster ids in [0, num_clusters).
// Cluster ids are ordered by each cluster's smallest member item, so equal
// partitions always serialize identically.
struct Clustering {
    std::uint32_t num_items = 0;
    std::uint32_t num_clusters = 0;
    std::vector<std::uint32_t> assignment;  // item -> cluster id
    double resolution = 1.0;
    std::uint64_t seed = 0;
};

// Member lists per cluster, each sorted ascending.
std::vector<std::vector<std::uint32_t>> cluster_members(const Clustering& clustering);

// Newman modularity with resolution gamma:
//   Q = (1/2m) sum_ij [A_ij - gamma k_i k_j / 2m] delta(c_i, c_j).
// An edgeless graph scores 0 by convention.
double modularity(const ItemGraph& graph, const std::vector<std::uint32_t>& assignment,
                  double resolution);

struct LouvainResult {
    Clustering clustering;
    // Modularity after every local-moving pass, across all aggregation
    // levels; non-decreasing by construction.
    std::vector<double> pass_modularity;
};

// Two-phase Louvain: seeded-shuffle local moving until a pass gains less than
// 1e-7 modularity, then aggregation, repeated until the graph stops
// shrinking. Ties in the move gain resolve to the lower community id. With
// max_cluster_size > 0, oversized clusters are re-partitioned on their
// induced subgraph at doubled resolution (recursively), falling back to
// contiguous blocks when a community refuses to split.
LouvainResult louvain(const ItemGraph& graph, double resolution, std::uint64_t seed,
                      std::size_t max_cluster_size = 0);

// Tab-separated `item<TAB>cluster` rows preceded by `# K=<k>
// resolution=<gamma> seed=<s>`; `provenance`, when non-empty, is written
// first as a comment line.
void save_clustering(const Clustering& clustering, const std::string& path,
                     const std::string& provenance = "");
Clustering load_clustering(const std::string& path);

}  // namespace uic
