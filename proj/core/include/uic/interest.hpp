#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uic/graph.hpp"
#include "uic/louvain.hpp"

namespace uic {

// Item-side Personalized PageRank mass for one seed user, renormalized to
// sum 1 over items. `scores` holds only non-zero entries, sorted by item.
struct PprScores {
    std::uint32_t user = 0;
    std::vector<std::pair<std::uint32_t, double>> scores;
    double damping = 0.85;
    double residual_bound = 0.0;
};

// Sparse interest profile eta_u: non-negative weights over cluster ids,
// summing to 1, sorted by cluster id. Zero-mass clusters are absent.
struct InterestProfile {
    std::uint32_t user = 0;
    std::vector<std::pair<std::uint32_t, double>> weights;
    std::uint32_t num_clusters = 0;
};

// Power iteration for the random walk with restart at `user`:
//   pi <- (1 - damping) e_user + damping P^T pi
// on the undirected bipartite walk, stopping when the L1 change drops below
// `tolerance` or after `max_iters` sweeps. Only item-node mass is returned.
PprScores ppr(const BipartiteGraph& bg, std::uint32_t user, double damping,
              double tolerance, std::size_t max_iters);

// eta_j = sum of PPR mass over items in cluster j, renormalized.
InterestProfile interest_from_ppr(const PprScores& scores, const Clustering& clustering);

// eta_j proportional to the user's engagement count in cluster j.
InterestProfile interest_from_counts(const BipartiteGraph& bg, std::uint32_t user,
                                     const Clustering& clustering);

// Applies the chosen per-user profile computation to every user, fanning out
// over `threads` workers. Output is indexed by user.
std::vector<InterestProfile> build_all_profiles(const BipartiteGraph& bg,
                                                const Clustering& clustering,
                                                const std::string& method,  // ppr | counts
                                                double damping, double tolerance,
                                                std::size_t max_iters, unsigned threads);

// Lines `user<TAB>cluster:weight,cluster:weight,...`, weights to 6 decimals.
void save_profiles(const std::vector<InterestProfile>& profiles, const std::string& path,
                   const std::string& provenance = "");
std::vector<InterestProfile> load_profiles(const std::string& path);

}  // namespace uic
