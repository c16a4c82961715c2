#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <doctest.h>

#include "test_support.hpp"
#include "uic/errors.hpp"
#include "uic/graph.hpp"
#include "uic/louvain.hpp"

using namespace uic;

namespace {

ItemGraph two_triangles() {
    // 0-1-2 and 3-4-5, joined by the single edge 2-3.
    return build_item_graph(6, {{0, 1, 1.0},
                                {1, 2, 1.0},
                                {0, 2, 1.0},
                                {3, 4, 1.0},
                                {4, 5, 1.0},
                                {3, 5, 1.0},
                                {2, 3, 1.0}});
}

ItemGraph random_item_graph(std::uint32_t n, double density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (unit(rng) < density) edges.push_back({i, j, 1.0 + unit(rng)});
    if (edges.empty()) edges.push_back({0, n - 1, 1.0});
    return build_item_graph(n, edges);
}

}  // namespace

TEST_CASE("modularity on frozen hand examples") {
    auto g = two_triangles();
    // Split at the bridge: 7 edges, 3 intra per side (12 ordered pairs),
    // degree sums 7 and 7. Q = 12/14 - 2 * (7/14)^2 = 0.3571428...
    std::vector<std::uint32_t> split{0, 0, 0, 1, 1, 1};
    CHECK(modularity(g, split, 1.0) == doctest::Approx(12.0 / 14.0 - 2.0 * 49.0 / 196.0)
                                           .epsilon(1e-12));
    // Everything in one community: Q = 1 - gamma at gamma=1 gives 0.
    std::vector<std::uint32_t> lump(6, 0);
    CHECK(modularity(g, lump, 1.0) == doctest::Approx(0.0));
    // All singletons: Q = -gamma sum (k_i/2m)^2.
    std::vector<std::uint32_t> singles{0, 1, 2, 3, 4, 5};
    double expect = 0.0;
    for (std::uint32_t v = 0; v < 6; ++v) {
        double frac = g.strength[v] / g.total_weight;
        expect -= frac * frac;
    }
    CHECK(modularity(g, singles, 1.0) == doctest::Approx(expect).epsilon(1e-12));
    // Resolution scales only the null-model term.
    double q1 = modularity(g, split, 1.0);
    double q2 = modularity(g, split, 2.0);
    CHECK(q2 == doctest::Approx(q1 - 2.0 * 49.0 / 196.0).epsilon(1e-12));

    CHECK_THROWS_AS(modularity(g, std::vector<std::uint32_t>{0, 0, 0}, 1.0), DataError);
}

TEST_CASE("louvain finds the exhaustive optimum on bridged cliques") {
    auto g = testsup::two_cliques_bridge();
    auto best = testsup::best_partition(g, 1.0);
    auto result = louvain(g, 1.0, 13);

    CHECK(testsup::splits_cliques(result.clustering.assignment));
    const double q = modularity(g, result.clustering.assignment, 1.0);
    CHECK(q == doctest::Approx(best.first).epsilon(1e-12));
    CHECK(result.clustering.num_clusters == 2);
    // The search never reports a partition it cannot re-score.
    CHECK(result.pass_modularity.back() == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("pass modularity never decreases") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto g = random_item_graph(24, 0.2, seed);
        auto result = louvain(g, 1.0, seed * 7 + 1);
        REQUIRE(!result.pass_modularity.empty());
        for (std::size_t i = 1; i < result.pass_modularity.size(); ++i)
            CHECK(result.pass_modularity[i] >= result.pass_modularity[i - 1] - 1e-12);
        // Final trace entry matches an independent re-evaluation.
        CHECK(modularity(g, result.clustering.assignment, 1.0) ==
              doctest::Approx(result.pass_modularity.back()).epsilon(1e-9));
    }
}

TEST_CASE("same seed reproduces the partition exactly") {
    auto g = random_item_graph(40, 0.12, 5);
    auto a = louvain(g, 1.0, 42);
    auto b = louvain(g, 1.0, 42);
    CHECK(a.clustering.assignment == b.clustering.assignment);
    CHECK(a.pass_modularity == b.pass_modularity);
}

TEST_CASE("huge resolution forces singletons") {
    auto g = two_triangles();
    auto result = louvain(g, 50.0, 3);
    CHECK(result.clustering.num_clusters == 6);
    for (std::uint32_t v = 0; v < 6; ++v) CHECK(result.clustering.assignment[v] == v);
}

TEST_CASE("cluster ids are dense and ordered by smallest member") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto g = random_item_graph(30, 0.15, seed + 50);
        auto result = louvain(g, 1.0, seed);
        const auto& c = result.clustering;
        CHECK(c.assignment.size() == g.num_nodes);
        // Dense: every id below num_clusters occurs.
        std::vector<char> seen(c.num_clusters, 0);
        for (auto id : c.assignment) {
            REQUIRE(id < c.num_clusters);
            seen[id] = 1;
        }
        CHECK(std::count(seen.begin(), seen.end(), 1) ==
              static_cast<std::ptrdiff_t>(c.num_clusters));
        // Ordered: walking items in index order, first occurrences of cluster
        // ids appear as 0, 1, 2, ...
        std::uint32_t next = 0;
        for (auto id : c.assignment)
            if (id == next) ++next;
        CHECK(next == c.num_clusters);
        CHECK(c.assignment[0] == 0);

        auto members = cluster_members(c);
        REQUIRE(members.size() == c.num_clusters);
        std::size_t total = 0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            CHECK(std::is_sorted(members[k].begin(), members[k].end()));
            CHECK(!members[k].empty());
            total += members[k].size();
            if (k + 1 < members.size())
                CHECK(members[k].front() < members[k + 1].front());
        }
        CHECK(total == g.num_nodes);
    }
}

TEST_CASE("max cluster size caps every cluster") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto g = random_item_graph(36, 0.25, seed + 11);
        for (std::size_t cap : {3u, 5u, 9u}) {
            auto result = louvain(g, 1.0, seed, cap);
            auto members = cluster_members(result.clustering);
            for (const auto& m : members) CHECK(m.size() <= cap);
            std::size_t total = 0;
            for (const auto& m : members) total += m.size();
            CHECK(total == g.num_nodes);
        }
    }
    // A clique that refuses to split still honors the cap via block fallback.
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges;
    for (std::uint32_t i = 0; i < 6; ++i)
        for (std::uint32_t j = i + 1; j < 6; ++j) edges.push_back({i, j, 1.0});
    auto clique = build_item_graph(6, edges);
    auto capped = louvain(clique, 0.5, 2, 4);
    for (const auto& m : cluster_members(capped.clustering)) CHECK(m.size() <= 4);
}

TEST_CASE("clustering round-trips through its artifact") {
    auto g = random_item_graph(30, 0.15, 77);
    auto result = louvain(g, 1.3, 21);
    testsup::TempDir dir;
    save_clustering(result.clustering, dir.file("clusters.tsv"),
                    "# generated-by=uic test config=0 seed=21 at=now");
    auto loaded = load_clustering(dir.file("clusters.tsv"));
    CHECK(loaded.num_items == result.clustering.num_items);
    CHECK(loaded.num_clusters == result.clustering.num_clusters);
    CHECK(loaded.assignment == result.clustering.assignment);
    CHECK(loaded.resolution == doctest::Approx(1.3));
    CHECK(loaded.seed == 21);

    CHECK_THROWS_AS(load_clustering(dir.file("missing.tsv")), DataError);
}
