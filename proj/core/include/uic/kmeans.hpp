#pragma once

#include <cstdint>
#include <vector>

#include "uic/retrieval.hpp"

namespace uic {

// Lloyd's algorithm output over item embedding rows.
struct KmeansModel {
    MatrixX<float> centroids;               // k x d
    std::vector<std::uint32_t> assignment;  // item -> centroid id
    std::uint64_t seed = 0;
};

// k-means++-seeded Lloyd iterations; converges when no centroid moves more
// than `tol` (L2). Empty clusters are re-seeded from the point farthest from
// its centroid. Nearest-centroid ties resolve to the lower centroid id.
KmeansModel kmeans(const MatrixX<float>& points, std::size_t k, std::uint64_t seed,
                   std::size_t max_iters = 100, double tol = 1e-6);

// Sum of squared distances from each point to its assigned centroid.
double kmeans_sse(const MatrixX<float>& points, const KmeansModel& model);

// Member lists per centroid, sorted ascending.
std::vector<std::vector<std::uint32_t>> kmeans_members(const KmeansModel& model);

// Rank centroids by <e_u, centroid> (ties toward the lower id), pool the
// members of the top n_centroids, then exact top-k inside the pool.
RankedList kmeans_topk(const Scorer& scorer, std::uint32_t user, const KmeansModel& model,
                       const std::vector<std::vector<std::uint32_t>>& members,
                       std::size_t n_centroids, std::span<const std::uint32_t> exclude,
                       std::size_t k, std::size_t* scored = nullptr);

}  // namespace uic
