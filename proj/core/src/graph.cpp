#include "uic/graph.hpp"

#include <algorithm>
#include <tuple>

#include "uic/errors.hpp"

namespace uic {

BipartiteGraph build_bipartite(std::uint32_t num_users, std::uint32_t num_items,
                               const std::vector<Interaction>& interactions) {
    BipartiteGraph bg;
    bg.num_users = num_users;
    bg.num_items = num_items;
    std::vector<std::size_t> udeg(num_users, 0), ideg(num_items, 0);
    for (const auto& x : interactions) {
        if (x.user >= num_users || x.item >= num_items)
            throw DataError("interaction index out of range");
        ++udeg[x.user];
        ++ideg[x.item];
    }
    bg.user_offsets.assign(num_users + 1, 0);
    bg.item_offsets.assign(num_items + 1, 0);
    for (std::uint32_t u = 0; u < num_users; ++u)
        bg.user_offsets[u + 1] = bg.user_offsets[u] + udeg[u];
    for (std::uint32_t i = 0; i < num_items; ++i)
        bg.item_offsets[i + 1] = bg.item_offsets[i] + ideg[i];
    bg.user_items.resize(interactions.size());
    bg.item_users.resize(interactions.size());
    std::vector<std::size_t> ucur(bg.user_offsets.begin(), bg.user_offsets.end() - 1);
    std::vector<std::size_t> icur(bg.item_offsets.begin(), bg.item_offsets.end() - 1);
    for (const auto& x : interactions) {
        bg.user_items[ucur[x.user]++] = x.item;
        bg.item_users[icur[x.item]++] = x.user;
    }
    for (std::uint32_t u = 0; u < num_users; ++u) {
        auto begin = bg.user_items.begin() + static_cast<std::ptrdiff_t>(bg.user_offsets[u]);
        auto end = bg.user_items.begin() + static_cast<std::ptrdiff_t>(bg.user_offsets[u + 1]);
        std::sort(begin, end);
        if (std::adjacent_find(begin, end) != end)
            throw DataError("duplicate (user,item) interaction in graph input");
    }
    for (std::uint32_t i = 0; i < num_items; ++i) {
        auto begin = bg.item_users.begin() + static_cast<std::ptrdiff_t>(bg.item_offsets[i]);
        auto end = bg.item_users.begin() + static_cast<std::ptrdiff_t>(bg.item_offsets[i + 1]);
        std::sort(begin, end);
    }
    return bg;
}

ItemGraph build_item_graph(
    std::uint32_t num_nodes,
    const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& edges) {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(num_nodes);
    for (const auto& [a, b, w] : edges) {
        if (a >= num_nodes || b >= num_nodes) throw DataError("edge endpoint out of range");
        if (w < 0.0) throw DataError("negative edge weight");
        if (a == b) {
            adj[a].emplace_back(a, 2.0 * w);
        } else {
            adj[a].emplace_back(b, w);
            adj[b].emplace_back(a, w);
        }
    }
    ItemGraph g;
    g.num_nodes = num_nodes;
    g.offsets.assign(num_nodes + 1, 0);
    for (std::uint32_t v = 0; v < num_nodes; ++v) {
        auto& list = adj[v];
        std::sort(list.begin(), list.end());
        // Merge parallel entries.
        std::size_t out = 0;
        for (std::size_t j = 0; j < list.size(); ++j) {
            if (out > 0 && list[out - 1].first == list[j].first)
                list[out - 1].second += list[j].second;
            else
                list[out++] = list[j];
        }
        list.resize(out);
        g.offsets[v + 1] = g.offsets[v] + out;
    }
    g.neighbors.reserve(g.offsets.back());
    g.weights.reserve(g.offsets.back());
    g.strength.assign(num_nodes, 0.0);
    for (std::uint32_t v = 0; v < num_nodes; ++v) {
        for (const auto& [n, w] : adj[v]) {
            g.neighbors.push_back(n);
            g.weights.push_back(w);
            g.strength[v] += w;
        }
        g.total_weight += g.strength[v];
    }
    return g;
}

ItemGraph project_co_engagement(const BipartiteGraph& bg) {
    const std::uint32_t n = bg.num_items;
    ItemGraph g;
    g.num_nodes = n;
    g.offsets.assign(n + 1, 0);

    // Two passes over the same row enumeration: first to count row degrees,
    // then to fill the CSR arrays. A stamp array gives O(1) de-duplication of
    // co-items within one row.
    std::vector<std::uint32_t> stamp(n, 0xffffffffu);
    auto for_each_row = [&](auto&& emit) {
        for (std::uint32_t i = 0; i < n; ++i) {
            for (std::uint32_t u : bg.users_of(i)) {
                for (std::uint32_t j : bg.items_of(u)) {
                    if (j == i || stamp[j] == i) continue;
                    stamp[j] = i;
                    emit(i, j);
                }
            }
        }
    };
    for_each_row([&](std::uint32_t i, std::uint32_t) { ++g.offsets[i + 1]; });
    for (std::uint32_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
    g.neighbors.resize(g.offsets.back());
    g.weights.assign(g.offsets.back(), 1.0);
    std::vector<std::size_t> cur(g.offsets.begin(), g.offsets.end() - 1);
    std::fill(stamp.begin(), stamp.end(), 0xffffffffu);
    for_each_row([&](std::uint32_t i, std::uint32_t j) { g.neighbors[cur[i]++] = j; });
    for (std::uint32_t i = 0; i < n; ++i)
        std::sort(g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[i]),
                  g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[i + 1]));
    g.strength.assign(n, 0.0);
    for (std::uint32_t i = 0; i < n; ++i) {
        g.strength[i] = static_cast<double>(g.degree(i));
        g.total_weight += g.strength[i];
    }
    return g;
}

}  // namespace uic
