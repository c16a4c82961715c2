#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "test_support.hpp"
#include "uic/errors.hpp"
#include "uic/graph.hpp"
#include "uic/model.hpp"

using namespace uic;

namespace {

using DModel = TwoTowerModelT<double>;

struct Fixture {
    DModel model;
    TrainBatch batch;
    std::vector<InterestProfile> profiles;
    std::vector<std::uint32_t> item_cluster;
};

Fixture make_fixture(FusionMode fusion, std::uint64_t seed) {
    Fixture f;
    const Eigen::Index num_users = 5, num_items = 7, num_clusters = 3;
    f.model = make_model<double>(num_users, num_items, num_clusters, 4, 3, 4, {6, 4},
                                 fusion, seed);
    f.batch.users = {0, 1, 2, 3};
    f.batch.negatives = 2;
    // positive, neg, neg per user; indices chosen to repeat some items so the
    // embedding-table gradient accumulates across rows.
    f.batch.items = {0, 1, 2, 3, 4, 5, 6, 0, 1, 2, 3, 4};
    f.batch.labels = {1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0};
    f.item_cluster = {0, 1, 2, 0, 1, 2, 0};
    for (std::uint32_t u = 0; u < num_users; ++u) {
        InterestProfile p;
        p.user = u;
        p.num_clusters = num_clusters;
        const double a = 0.2 + 0.1 * u;
        p.weights = {{0, a}, {2, 1.0 - a}};
        if (u % 2 == 1) p.weights = {{1, 1.0}};
        f.profiles.push_back(std::move(p));
    }
    return f;
}

// Central-difference check of every element of every parameter block.
void check_all_gradients(Fixture& f, double dropout, std::uint64_t mask_seed) {
    auto loss_at = [&]() {
        return batch_loss_and_grad<double>(f.model, f.batch, f.profiles, &f.item_cluster,
                                           dropout, dropout > 0.0, mask_seed, nullptr);
    };
    DModel grads = zero_like(f.model);
    batch_loss_and_grad<double>(f.model, f.batch, f.profiles, &f.item_cluster, dropout,
                                dropout > 0.0, mask_seed, &grads);

    std::vector<MatrixX<double>*> grad_blocks;
    for_each_block(grads, [&](const std::string&, MatrixX<double>& m) {
        grad_blocks.push_back(&m);
    });
    std::size_t index = 0;
    const double h = 1e-5;
    for_each_block(f.model, [&](const std::string& name, MatrixX<double>& block) {
        const MatrixX<double>& g = *grad_blocks[index++];
        REQUIRE(g.rows() == block.rows());
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
            for (Eigen::Index c = 0; c < block.cols(); ++c) {
                const double keep = block(r, c);
                block(r, c) = keep + h;
                const double up = loss_at();
                block(r, c) = keep - h;
                const double down = loss_at();
                block(r, c) = keep;
                const double numeric = (up - down) / (2.0 * h);
                const double analytic = g(r, c);
                const double rel = std::abs(analytic - numeric) /
                                   std::max(1e-6, std::abs(analytic) + std::abs(numeric));
                CAPTURE(name);
                CAPTURE(r);
                CAPTURE(c);
                CAPTURE(analytic);
                CAPTURE(numeric);
                CHECK(rel <= 1e-4);
            }
        }
    });
}

}  // namespace

TEST_CASE("analytic gradients match central differences (no fusion)") {
    auto f = make_fixture(FusionMode::None, 11);
    check_all_gradients(f, 0.0, 0);
}

TEST_CASE("analytic gradients match central differences (interest concat)") {
    auto f = make_fixture(FusionMode::Concat, 12);
    check_all_gradients(f, 0.0, 0);
}

TEST_CASE("analytic gradients match central differences (cluster attention)") {
    auto f = make_fixture(FusionMode::Attention, 13);
    check_all_gradients(f, 0.0, 0);
}

TEST_CASE("gradients stay exact under a fixed dropout mask") {
    // Same mask_seed on every evaluation freezes the dropout pattern, so the
    // loss is still differentiable and central differences must agree.
    auto f = make_fixture(FusionMode::Concat, 14);
    check_all_gradients(f, 0.3, 977);
}

TEST_CASE("binary cross entropy closed form") {
    CHECK(bce_loss<double>({0.0}, {1.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss<double>({0.0}, {0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // Mean over the batch.
    CHECK(bce_loss<double>({2.0, -1.0}, {1.0, 0.0}) ==
          doctest::Approx(0.5 * (std::log1p(std::exp(-2.0)) + std::log1p(std::exp(-1.0))))
              .epsilon(1e-12));
    // Saturated logits stay finite and tight.
    CHECK(bce_loss<double>({100.0}, {1.0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bce_loss<double>({-100.0}, {0.0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bce_loss<double>({100.0}, {0.0}) == doctest::Approx(100.0));
    CHECK_THROWS_AS(bce_loss<double>({1.0}, {1.0, 0.0}), DataError);
    CHECK_THROWS_AS(bce_loss<double>({}, {}), DataError);
}

TEST_CASE("batch loss equals bce of the produced logits") {
    auto f = make_fixture(FusionMode::None, 21);
    double loss = batch_loss_and_grad<double>(f.model, f.batch, f.profiles, nullptr, 0.0,
                                              false, 0, nullptr);
    // Recompute logits independently from eval-mode embeddings.
    std::vector<double> logits, labels;
    for (std::size_t r = 0; r < f.batch.items.size(); ++r) {
        auto e_u = user_forward<double>(f.model, f.batch.users[r / 3], nullptr);
        auto e_i = item_forward<double>(f.model, f.batch.items[r]);
        logits.push_back(e_u.dot(e_i));
        labels.push_back(f.batch.labels[r]);
    }
    CHECK(loss == doctest::Approx(bce_loss<double>(logits, labels)).epsilon(1e-12));

    TrainBatch bad = f.batch;
    bad.items.pop_back();
    bad.labels.pop_back();
    CHECK_THROWS_AS(batch_loss_and_grad<double>(f.model, bad, f.profiles, nullptr, 0.0,
                                                false, 0, nullptr),
                    DataError);
}

TEST_CASE("adamw single-step hand formula") {
    const double lr = 0.1, wd = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double param = 1.0, grad = 0.5, m = 0.0, v = 0.0;
    adamw_flat_step(&param, &grad, &m, &v, 1, lr, wd, b1, b2, eps, 1);

    const double m1 = (1 - b1) * grad;
    const double v1 = (1 - b2) * grad * grad;
    const double mhat = m1 / (1 - b1);
    const double vhat = v1 / (1 - b2);
    const double want = 1.0 - lr * mhat / (std::sqrt(vhat) + eps) - lr * wd * 1.0;
    CHECK(param == doctest::Approx(want).epsilon(1e-12));
    CHECK(m == doctest::Approx(m1).epsilon(1e-12));
    CHECK(v == doctest::Approx(v1).epsilon(1e-12));

    // Weight decay is decoupled: it applies even at zero gradient.
    double p2 = 2.0, g2 = 0.0, m2 = 0.0, v2 = 0.0;
    adamw_flat_step(&p2, &g2, &m2, &v2, 1, lr, wd, b1, b2, eps, 1);
    CHECK(p2 == doctest::Approx(2.0 - lr * wd * 2.0).epsilon(1e-12));
}

TEST_CASE("adamw optimizer state walks every block") {
    auto f = make_fixture(FusionMode::Concat, 31);
    auto grads = zero_like(f.model);
    batch_loss_and_grad<double>(f.model, f.batch, f.profiles, nullptr, 0.0, false, 0, &grads);
    auto before = f.model;
    AdamWStateT<double> state = make_adamw_state(f.model);
    adamw_step(f.model, grads, state, 1e-2, 0.0);
    CHECK(state.t == 1);
    // Every block with a non-zero gradient moved.
    std::vector<const MatrixX<double>*> old_blocks, new_blocks, grad_blocks;
    for_each_block(before, [&](const std::string&, const MatrixX<double>& m) {
        old_blocks.push_back(&m);
    });
    for_each_block(f.model, [&](const std::string&, const MatrixX<double>& m) {
        new_blocks.push_back(&m);
    });
    for_each_block(grads, [&](const std::string&, const MatrixX<double>& m) {
        grad_blocks.push_back(&m);
    });
    for (std::size_t b = 0; b < old_blocks.size(); ++b) {
        if (grad_blocks[b]->cwiseAbs().maxCoeff() > 0.0)
            CHECK((*old_blocks[b] - *new_blocks[b]).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("initialization is seed-deterministic and shared across modes") {
    auto a = make_model<float>(6, 8, 3, 4, 3, 4, {6, 4}, FusionMode::Concat, 99);
    auto b = make_model<float>(6, 8, 3, 4, 3, 4, {6, 4}, FusionMode::Concat, 99);
    auto c = make_model<float>(6, 8, 3, 4, 3, 4, {6, 4}, FusionMode::Concat, 100);
    CHECK(a.user_embeddings == b.user_embeddings);
    CHECK(a.w1 == b.w1);
    CHECK(a.user_tower.weights[0] == b.user_tower.weights[0]);
    CHECK(a.user_embeddings != c.user_embeddings);

    // Blocks shared between fusion modes are byte-identical under one seed.
    auto none = make_model<float>(6, 8, 3, 4, 3, 4, {6, 4}, FusionMode::None, 99);
    auto attn = make_model<float>(6, 8, 3, 4, 3, 4, {6, 4}, FusionMode::Attention, 99);
    CHECK(none.user_embeddings == a.user_embeddings);
    CHECK(none.item_embeddings == a.item_embeddings);
    CHECK(none.user_tower.weights[1] == a.user_tower.weights[1]);
    CHECK(attn.item_tower.weights[0] == a.item_tower.weights[0]);
    CHECK(attn.user_embeddings == a.user_embeddings);

    for (const auto& bias : a.user_tower.biases) CHECK(bias.cwiseAbs().maxCoeff() == 0.0f);

    CHECK_THROWS_AS(make_model<float>(6, 8, 3, 4, 3, 4, {6, 5}, FusionMode::None, 1),
                    ConfigError);
    CHECK_THROWS_AS(make_model<float>(6, 8, 0, 4, 3, 4, {6, 4}, FusionMode::Concat, 1),
                    ConfigError);
    CHECK_THROWS_AS(make_model<float>(0, 8, 3, 4, 3, 4, {6, 4}, FusionMode::None, 1),
                    ConfigError);
}

TEST_CASE("fusion mode names round-trip") {
    for (auto mode : {FusionMode::None, FusionMode::Concat, FusionMode::Attention})
        CHECK(fusion_from_string(to_string(mode)) == mode);
    CHECK_THROWS_AS(fusion_from_string("bogus"), ConfigError);
}

TEST_CASE("attention weights form a stable softmax") {
    auto f = make_fixture(FusionMode::Attention, 41);
    RowVectorX<double> e_u = user_forward<double>(f.model, 2, nullptr);
    auto alpha = attention_weights(f.model, e_u);
    CHECK(alpha.size() == f.model.num_clusters);
    CHECK(alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index j = 0; j < alpha.size(); ++j) CHECK(alpha[j] > 0.0);

    RowVectorX<double> e_i = item_forward<double>(f.model, 3);
    CHECK(score_attention(f.model, e_u, e_i, 1) ==
          doctest::Approx(alpha[1] * e_u.dot(e_i)).epsilon(1e-12));
    CHECK_THROWS_AS(score_attention(f.model, e_u, e_i, 9), DataError);

    // Scaling the logits by 1000 must not overflow the exponentials.
    f.model.cluster_embeddings *= 1000.0;
    auto scaled = attention_weights(f.model, e_u);
    CHECK(std::isfinite(scaled.sum()));
    CHECK(scaled.sum() == doctest::Approx(1.0).epsilon(1e-9));

    // A cluster whose logit dominates by 50 takes essentially all the mass.
    f.model.cluster_embeddings.setZero();
    f.model.cluster_embeddings.row(1) = e_u * (50.0 / e_u.squaredNorm());
    auto sharp = attention_weights(f.model, e_u);
    CHECK(sharp[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sharp.maxCoeff() == sharp[1]);

    auto vanilla = make_model<double>(3, 3, 0, 4, 0, 4, {4}, FusionMode::None, 1);
    CHECK_THROWS_AS(attention_weights(vanilla, e_u), ConfigError);
}

TEST_CASE("negative sampling avoids the user's items") {
    auto bg = build_bipartite(
        3, 6, {{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {1, 3, 0}, {2, 0, 0}, {2, 1, 0},
               {2, 2, 0}, {2, 3, 0}, {2, 4, 0}, {2, 5, 0}});
    auto rng = make_rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto negs = sample_negatives(bg, 0, 3, rng);
        REQUIRE(negs.size() == 3);
        std::set<std::uint32_t> unique(negs.begin(), negs.end());
        CHECK(unique.size() == 3);  // no duplicates within one draw
        for (auto i : negs) {
            CHECK(i < 6);
            CHECK(i >= 3);  // items 0,1,2 are engaged by user 0
        }
    }
    // User 2 engaged everything: no negative exists.
    CHECK_THROWS_AS(sample_negatives(bg, 2, 1, rng), DataError);
    // Asking for more negatives than the complement holds.
    CHECK_THROWS_AS(sample_negatives(bg, 0, 4, rng), DataError);
}

TEST_CASE("whole-table embeddings equal per-row forwards") {
    for (auto mode : {FusionMode::None, FusionMode::Concat}) {
        auto f = make_fixture(mode, 51);
        auto users = all_user_embeddings(f.model, f.profiles);
        REQUIRE(users.rows() == f.model.num_users);
        for (std::uint32_t u = 0; u < f.model.num_users; ++u) {
            const InterestProfile* eta =
                mode == FusionMode::Concat ? &f.profiles[u] : nullptr;
            RowVectorX<double> row = user_forward<double>(f.model, u, eta);
            CHECK((users.row(u) - row).cwiseAbs().maxCoeff() <= 1e-12);
        }
        auto items = all_item_embeddings(f.model);
        for (std::uint32_t i = 0; i < f.model.num_items; ++i) {
            RowVectorX<double> row = item_forward<double>(f.model, i);
            CHECK((items.row(i) - row).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    auto f = make_fixture(FusionMode::Concat, 52);
    CHECK_THROWS_AS(user_forward<double>(f.model, 0, nullptr), DataError);
    CHECK_THROWS_AS(user_forward<double>(f.model, 99, &f.profiles[0]), DataError);
    CHECK_THROWS_AS(item_forward<double>(f.model, 99), DataError);
}

TEST_CASE("model files round-trip every block") {
    testsup::TempDir dir;
    for (auto mode : {FusionMode::None, FusionMode::Concat, FusionMode::Attention}) {
        auto model =
            make_model<float>(6, 9, 3, 4, 3, 4, {5, 4}, mode, 7 + static_cast<int>(mode));
        auto path = dir.file("model_" + to_string(mode) + ".bin");
        save_model(model, path, "# generated-by=uic test config=0 seed=7 at=now");
        auto loaded = load_model(path);
        CHECK(loaded.fusion == model.fusion);
        CHECK(loaded.num_users == model.num_users);
        CHECK(loaded.num_items == model.num_items);
        CHECK(loaded.num_clusters == model.num_clusters);
        CHECK(loaded.d_in == model.d_in);
        CHECK(loaded.d_interest == model.d_interest);
        CHECK(loaded.d_out == model.d_out);

        std::vector<const MatrixX<float>*> want;
        for_each_block(model, [&](const std::string&, const MatrixX<float>& m) {
            want.push_back(&m);
        });
        std::size_t index = 0;
        for_each_block(loaded, [&](const std::string& name, const MatrixX<float>& m) {
            CAPTURE(name);
            REQUIRE(index < want.size());
            CHECK(m == *want[index++]);  // bit-exact float round trip
        });
        CHECK(index == want.size());
    }
    CHECK_THROWS_AS(load_model(dir.file("missing.bin")), DataError);
}

TEST_CASE("embedding matrices round-trip bit-exactly") {
    testsup::TempDir dir;
    MatrixX<float> m(3, 5);
    for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < 5; ++c)
            m(r, c) = static_cast<float>(0.25 * static_cast<double>(r) - 0.125 * c);
    export_embeddings(m, dir.file("e.bin"));
    auto loaded = load_embeddings(dir.file("e.bin"));
    CHECK(loaded.rows() == 3);
    CHECK(loaded.cols() == 5);
    CHECK(loaded == m);
    CHECK_THROWS_AS(load_embeddings(dir.file("missing.bin")), DataError);
}
