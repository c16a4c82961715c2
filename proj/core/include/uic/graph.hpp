#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uic/dataset.hpp"

namespace uic {

// User-item engagement structure with CSR adjacency in both directions.
// Adjacency lists are sorted ascending and duplicate-free; the two directions
// are transposes of each other.
struct BipartiteGraph {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<std::size_t> user_offsets;  // num_users + 1
    std::vector<std::uint32_t> user_items;
    std::vector<std::size_t> item_offsets;  // num_items + 1
    std::vector<std::uint32_t> item_users;

    std::span<const std::uint32_t> items_of(std::uint32_t user) const {
        return {user_items.data() + user_offsets[user],
                user_offsets[user + 1] - user_offsets[user]};
    }
    std::span<const std::uint32_t> users_of(std::uint32_t item) const {
        return {item_users.data() + item_offsets[item],
                item_offsets[item + 1] - item_offsets[item]};
    }
    std::size_t user_degree(std::uint32_t user) const {
        return user_offsets[user + 1] - user_offsets[user];
    }
    std::size_t item_degree(std::uint32_t item) const {
        return item_offsets[item + 1] - item_offsets[item];
    }
};

BipartiteGraph build_bipartite(std::uint32_t num_users, std::uint32_t num_items,
                               const std::vector<Interaction>& interactions);

// Weighted undirected graph in ordered-pair CSR form: each edge {i,j}, i != j,
// appears as both (i,j) and (j,i) with equal weight; a self-loop appears once
// and its stored weight is the full ordered-pair mass A_ii. With that
// convention strength k_i = sum_j A_ij and total_weight = sum_i k_i = 2m,
// which is what the modularity formulas below consume directly.
struct ItemGraph {
    std::uint32_t num_nodes = 0;
    std::vector<std::size_t> offsets;  // num_nodes + 1
    std::vector<std::uint32_t> neighbors;
    std::vector<double> weights;
    std::vector<double> strength;
    double total_weight = 0.0;

    std::span<const std::uint32_t> neighbors_of(std::uint32_t node) const {
        return {neighbors.data() + offsets[node], offsets[node + 1] - offsets[node]};
    }
    std::span<const double> weights_of(std::uint32_t node) const {
        return {weights.data() + offsets[node], offsets[node + 1] - offsets[node]};
    }
    std::size_t degree(std::uint32_t node) const {
        return offsets[node + 1] - offsets[node];
    }
};

// Builds an ItemGraph from undirected edge endpoints; parallel (i,j) entries
// are summed. Self loops (i == i) are accepted and stored with weight
// 2 * the supplied value, matching the ordered-pair convention.
ItemGraph build_item_graph(std::uint32_t num_nodes,
                           const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& edges);

// Unweighted co-engagement projection: items i and j are connected when at
// least one user engaged both. All edge weights are 1; no self-loops.
ItemGraph project_co_engagement(const BipartiteGraph& bg);

}  // namespace uic
