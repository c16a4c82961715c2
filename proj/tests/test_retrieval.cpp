#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <doctest.h>

#include "test_support.hpp"
#include "uic/errors.hpp"
#include "uic/louvain.hpp"
#include "uic/model.hpp"
#include "uic/retrieval.hpp"
#include "uic/rng.hpp"

using namespace uic;

namespace {

// A scorer with explicit score tables, bypassing any model.
Scorer manual_scorer(std::uint32_t num_users, std::uint32_t num_items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Scorer s;
    s.users.resize(num_users, 8);
    s.items.resize(num_items, 8);
    for (Eigen::Index r = 0; r < s.users.rows(); ++r)
        for (Eigen::Index c = 0; c < 8; ++c) s.users(r, c) = static_cast<float>(normal(rng));
    for (Eigen::Index r = 0; r < s.items.rows(); ++r)
        for (Eigen::Index c = 0; c < 8; ++c) s.items(r, c) = static_cast<float>(normal(rng));
    return s;
}

std::vector<float> score_row(const Scorer& s, std::uint32_t user) {
    std::vector<float> scores(s.num_items());
    for (std::uint32_t i = 0; i < s.num_items(); ++i) scores[i] = s.score(user, i);
    return scores;
}

InterestProfile profile_of(std::uint32_t user,
                           std::vector<std::pair<std::uint32_t, double>> weights,
                           std::uint32_t num_clusters) {
    InterestProfile p;
    p.user = user;
    p.weights = std::move(weights);
    p.num_clusters = num_clusters;
    return p;
}

}  // namespace

TEST_CASE("full scan equals the sort oracle") {
    auto s = manual_scorer(40, 200, 5);
    std::vector<std::uint32_t> all(200);
    std::iota(all.begin(), all.end(), 0);
    for (std::uint32_t u = 0; u < 40; ++u) {
        std::set<std::uint32_t> excluded{u % 200, (u * 7 + 3) % 200};
        std::vector<std::uint32_t> exclude(excluded.begin(), excluded.end());
        auto scores = score_row(s, u);
        for (std::size_t k : {1u, 10u, 50u}) {
            std::size_t scored = 0;
            auto list = full_scan_topk(s, u, exclude, k, &scored);
            CHECK(list.user == u);
            CHECK(scored == 198);
            CHECK(list.items == testsup::topk_oracle(scores, all, excluded, k));
            REQUIRE(list.scores.size() == list.items.size());
            for (std::size_t j = 0; j < list.items.size(); ++j) {
                CHECK(list.scores[j] == s.score(u, list.items[j]));
                if (j) CHECK(list.scores[j] <= list.scores[j - 1]);
            }
        }
    }
}

TEST_CASE("exact ties rank the lower item first") {
    Scorer s;
    s.users = MatrixX<float>::Ones(1, 4);
    s.items = MatrixX<float>::Ones(6, 4);  // every item scores exactly 4.0
    auto list = full_scan_topk(s, 0, {}, 4);
    CHECK(list.items == std::vector<std::uint32_t>{0, 1, 2, 3});
    // Excluding item 0 shifts the window, never reorders it.
    std::vector<std::uint32_t> exclude{0};
    auto shifted = full_scan_topk(s, 0, exclude, 4);
    CHECK(shifted.items == std::vector<std::uint32_t>{1, 2, 3, 4});
}

TEST_CASE("excluded items never appear") {
    auto s = manual_scorer(10, 60, 8);
    std::vector<std::uint32_t> exclude{3, 17, 41, 42};
    for (std::uint32_t u = 0; u < 10; ++u) {
        auto list = full_scan_topk(s, u, exclude, 60);
        CHECK(list.items.size() == 56);
        for (auto i : list.items)
            CHECK(!std::binary_search(exclude.begin(), exclude.end(), i));
    }
}

TEST_CASE("cluster selection takes the heaviest clusters with padding") {
    auto rng = make_rng(1);
    auto p = profile_of(0, {{2, 0.5}, {0, 0.3}, {4, 0.2}}, 6);
    CHECK(select_clusters(p, 1, 6, "top", rng) == std::vector<std::uint32_t>{2});
    CHECK(select_clusters(p, 2, 6, "top", rng) == std::vector<std::uint32_t>{2, 0});
    CHECK(select_clusters(p, 3, 6, "top", rng) == std::vector<std::uint32_t>{2, 0, 4});
    // Beyond the support, pad with the remaining ids ascending.
    CHECK(select_clusters(p, 5, 6, "top", rng) == std::vector<std::uint32_t>{2, 0, 4, 1, 3});
    auto everything = select_clusters(p, 6, 6, "top", rng);
    CHECK(everything.size() == 6);
    std::set<std::uint32_t> unique(everything.begin(), everything.end());
    CHECK(unique.size() == 6);
    // n beyond num_clusters clips to num_clusters.
    CHECK(select_clusters(p, 10, 6, "top", rng).size() == 6);

    // Weight ties resolve to the lower cluster id.
    auto tied = profile_of(0, {{1, 0.5}, {3, 0.5}}, 4);
    CHECK(select_clusters(tied, 1, 4, "top", rng) == std::vector<std::uint32_t>{1});

    CHECK_THROWS_AS(select_clusters(p, 1, 6, "weird", rng), ConfigError);
}

TEST_CASE("sampled cluster selection follows the profile weights") {
    auto p = profile_of(0, {{0, 0.7}, {1, 0.3}}, 2);
    auto rng = make_rng(20240819);
    const int trials = 100000;
    int zero_first = 0;
    for (int t = 0; t < trials; ++t) {
        auto picked = select_clusters(p, 1, 2, "sample", rng);
        REQUIRE(picked.size() == 1);
        if (picked[0] == 0) ++zero_first;
    }
    // Binomial(1e5, 0.7) has sigma ~ 145; +-0.01 is a 6.9-sigma corridor.
    CHECK(static_cast<double>(zero_first) / trials == doctest::Approx(0.7).epsilon(0.015));

    // Without replacement: n = support size returns each cluster once.
    auto both = select_clusters(p, 2, 2, "sample", rng);
    std::set<std::uint32_t> unique(both.begin(), both.end());
    CHECK(unique.size() == 2);
}

TEST_CASE("cluster-restricted retrieval over all clusters equals a full scan") {
    // Acceptance shape: with every cluster selected the candidate pool is the
    // whole catalog, so results must be item-identical with the full scan.
    auto s = manual_scorer(100, 120, 33);
    auto clustering = louvain(testsup::two_cliques_bridge(), 1.0, 1).clustering;
    // Spread the 120 items over 6 synthetic clusters instead.
    Clustering wide;
    wide.num_items = 120;
    wide.num_clusters = 6;
    wide.assignment.resize(120);
    for (std::uint32_t i = 0; i < 120; ++i) wide.assignment[i] = i % 6;
    auto members = cluster_members(wide);

    auto rng = make_rng(9);
    for (std::uint32_t u = 0; u < 100; ++u) {
        auto p = profile_of(u, {{0, 0.4}, {3, 0.6}}, 6);
        std::vector<std::uint32_t> exclude{u % 120};
        std::size_t scored_cluster = 0, scored_full = 0;
        auto restricted = cluster_topk(s, u, p, members, 6, "top", rng, exclude, 10,
                                       &scored_cluster);
        auto full = full_scan_topk(s, u, exclude, 10, &scored_full);
        CHECK(restricted.items == full.items);
        CHECK(scored_cluster == scored_full);
    }
    (void)clustering;
}

TEST_CASE("cluster-restricted retrieval stays inside the selected pool") {
    auto s = manual_scorer(4, 40, 77);
    Clustering c;
    c.num_items = 40;
    c.num_clusters = 4;
    c.assignment.resize(40);
    for (std::uint32_t i = 0; i < 40; ++i) c.assignment[i] = i / 10;
    auto members = cluster_members(c);

    auto rng = make_rng(3);
    auto p = profile_of(0, {{2, 0.9}, {0, 0.1}}, 4);
    std::size_t scored = 0;
    auto list = cluster_topk(s, 0, p, members, 1, "top", rng, {}, 40, &scored);
    // Only cluster 2 (items 20..29) is eligible.
    CHECK(scored == 10);
    CHECK(list.items.size() == 10);
    for (auto i : list.items) CHECK((i >= 20 && i < 30));

    // The pool minus exclusions can undershoot k; the list just shortens.
    std::vector<std::uint32_t> exclude{20, 21, 22, 23, 24};
    auto shorter = cluster_topk(s, 0, p, members, 1, "top", rng, exclude, 40, nullptr);
    CHECK(shorter.items.size() == 5);
}

TEST_CASE("attention scorer multiplies dot products by cluster weight") {
    auto model = make_model<float>(3, 5, 2, 4, 0, 4, {4}, FusionMode::Attention, 6);
    std::vector<std::uint32_t> item_cluster{0, 1, 0, 1, 0};
    std::vector<InterestProfile> profiles;  // unused in attention mode
    auto scorer = build_scorer(model, profiles, false, &item_cluster);

    for (std::uint32_t u = 0; u < 3; ++u) {
        RowVectorX<float> e_u = user_forward<float>(model, u, nullptr);
        auto alpha = attention_weights(model, e_u);
        for (std::uint32_t i = 0; i < 5; ++i) {
            RowVectorX<float> e_i = item_forward<float>(model, i);
            float want = alpha[item_cluster[i]] * e_u.dot(e_i);
            CHECK(scorer.score(u, i) == doctest::Approx(want).epsilon(1e-5));
        }
    }
    // The attention table rows are distributions.
    for (Eigen::Index u = 0; u < scorer.alpha.rows(); ++u)
        CHECK(scorer.alpha.row(u).sum() == doctest::Approx(1.0f).epsilon(1e-5));

    CHECK_THROWS_AS(build_scorer(model, profiles, false, nullptr), ConfigError);
    std::vector<std::uint32_t> short_map{0, 1};
    CHECK_THROWS_AS(build_scorer(model, profiles, false, &short_map), ConfigError);
}

TEST_CASE("cosine scoring normalizes embedding rows") {
    auto model = make_model<float>(4, 6, 0, 5, 0, 5, {5}, FusionMode::None, 2);
    std::vector<InterestProfile> profiles;
    auto scorer = build_scorer(model, profiles, true);
    for (Eigen::Index r = 0; r < scorer.users.rows(); ++r)
        CHECK(scorer.users.row(r).norm() == doctest::Approx(1.0f).epsilon(1e-5));
    for (Eigen::Index r = 0; r < scorer.items.rows(); ++r)
        CHECK(scorer.items.row(r).norm() == doctest::Approx(1.0f).epsilon(1e-5));
    for (std::uint32_t u = 0; u < 4; ++u)
        for (std::uint32_t i = 0; i < 6; ++i) {
            CHECK(scorer.score(u, i) <= 1.0f + 1e-5f);
            CHECK(scorer.score(u, i) >= -1.0f - 1e-5f);
        }
}

TEST_CASE("inference benchmark reports median sweeps and candidate counts") {
    auto s = manual_scorer(30, 50, 44);
    std::vector<std::uint32_t> users(30);
    std::iota(users.begin(), users.end(), 0);
    auto report = benchmark_inference("full_scan", users, 3, [&](std::uint32_t u,
                                                                 std::size_t* scored) {
        return full_scan_topk(s, u, {}, 10, scored);
    });
    CHECK(report.strategy == "full_scan");
    CHECK(report.users == 30);
    CHECK(report.total_seconds > 0.0);
    CHECK(report.median_seconds >= 0.0);
    CHECK(report.candidates_scored == 30u * 50u);

    CHECK_THROWS_AS(benchmark_inference("x", {}, 1,
                                        [&](std::uint32_t, std::size_t*) {
                                            return RankedList{};
                                        }),
                    DataError);
    CHECK_THROWS_AS(benchmark_inference("x", users, 0,
                                        [&](std::uint32_t u, std::size_t* scored) {
                                            return full_scan_topk(s, u, {}, 1, scored);
                                        }),
                    ConfigError);
}

TEST_CASE("recommendation lists round-trip through their artifact") {
    auto s = manual_scorer(12, 30, 55);
    std::vector<RankedList> lists;
    for (std::uint32_t u = 0; u < 12; ++u) lists.push_back(full_scan_topk(s, u, {}, 7));

    testsup::TempDir dir;
    save_recs(lists, dir.file("recs.tsv"), "# generated-by=uic test config=0 seed=0 at=now");
    auto loaded = load_recs(dir.file("recs.tsv"));
    REQUIRE(loaded.size() == lists.size());
    for (std::size_t u = 0; u < lists.size(); ++u) {
        CHECK(loaded[u].user == lists[u].user);
        CHECK(loaded[u].items == lists[u].items);
        REQUIRE(loaded[u].scores.size() == lists[u].scores.size());
        for (std::size_t j = 0; j < lists[u].scores.size(); ++j)
            CHECK(loaded[u].scores[j] ==
                  doctest::Approx(lists[u].scores[j]).epsilon(2e-4));  // 4 decimals stored
    }
    CHECK_THROWS_AS(load_recs(dir.file("missing.tsv")), DataError);
}
