#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uic/errors.hpp"
#include "uic/interest.hpp"
#include "uic/rng.hpp"

namespace uic {

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVectorX = Eigen::Matrix<S, 1, Eigen::Dynamic, Eigen::RowMajor>;

enum class FusionMode { None, Concat, Attention };

FusionMode fusion_from_string(const std::string& name);
std::string to_string(FusionMode mode);

// MLP tower: weights[l] maps layer l's input to its output, biases stored as
// 1 x n rows. ReLU (and dropout in train mode) after every layer except the
// last; the last layer's width is the embedding dimension d_out.
template <typename S>
struct Tower {
    std::vector<MatrixX<S>> weights;
    std::vector<MatrixX<S>> biases;
};

// Dual-encoder model with optional interest fusion. Concat mode implements
//   e_u = user_tower(W2 * (W1 * eta  ++  x_u)),    e_i = item_tower(x_i);
// attention mode replaces the concat path entirely: towers see raw embeddings
// and scoring multiplies the dot product by a per-(user, item-cluster)
// softmax weight over cluster embeddings. None mode is the vanilla two-tower.
//
// The same struct doubles as the gradient container: gradients of a model
// are a zero-initialized model of identical shape.
template <typename S>
struct TwoTowerModelT {
    FusionMode fusion = FusionMode::None;
    Eigen::Index num_users = 0, num_items = 0, num_clusters = 0;
    Eigen::Index d_in = 0, d_interest = 0, d_out = 0;

    MatrixX<S> user_embeddings;     // num_users x d_in
    MatrixX<S> item_embeddings;     // num_items x d_in
    MatrixX<S> w1;                  // num_clusters x d_interest (concat)
    MatrixX<S> w2;                  // (d_interest + d_in) x d_in (concat)
    MatrixX<S> cluster_embeddings;  // num_clusters x d_out (attention)
    Tower<S> user_tower;            // input d_in
    Tower<S> item_tower;            // input d_in
};

using TwoTowerModel = TwoTowerModelT<float>;

// Visits every parameter block as (name, matrix) in the fixed serialization
// order. The order is part of the model file format.
template <typename S, typename Fn>
void for_each_block(TwoTowerModelT<S>& model, Fn&& fn) {
    fn(std::string("user_embeddings"), model.user_embeddings);
    fn(std::string("item_embeddings"), model.item_embeddings);
    if (model.fusion == FusionMode::Concat) {
        fn(std::string("w1"), model.w1);
        fn(std::string("w2"), model.w2);
    }
    if (model.fusion == FusionMode::Attention)
        fn(std::string("cluster_embeddings"), model.cluster_embeddings);
    for (std::size_t l = 0; l < model.user_tower.weights.size(); ++l) {
        fn("user_tower.w" + std::to_string(l), model.user_tower.weights[l]);
        fn("user_tower.b" + std::to_string(l), model.user_tower.biases[l]);
    }
    for (std::size_t l = 0; l < model.item_tower.weights.size(); ++l) {
        fn("item_tower.w" + std::to_string(l), model.item_tower.weights[l]);
        fn("item_tower.b" + std::to_string(l), model.item_tower.biases[l]);
    }
}

template <typename S, typename Fn>
void for_each_block(const TwoTowerModelT<S>& model, Fn&& fn) {
    for_each_block(const_cast<TwoTowerModelT<S>&>(model),
                   [&](const std::string& name, MatrixX<S>& m) {
                       fn(name, static_cast<const MatrixX<S>&>(m));
                   });
}

namespace detail {

inline std::uint64_t name_tag(const std::string& name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

// Embedding tables and cluster embeddings start at N(0, 0.01^2); weight
// matrices use fan-in-scaled normals, biases zero. Each block draws from its
// own seed stream keyed by block name, so blocks shared between fusion modes
// initialize identically under the same seed.
template <typename S>
TwoTowerModelT<S> make_model(Eigen::Index num_users, Eigen::Index num_items,
                             Eigen::Index num_clusters, Eigen::Index d_in,
                             Eigen::Index d_interest, Eigen::Index d_out,
                             const std::vector<std::size_t>& hidden, FusionMode fusion,
                             std::uint64_t seed) {
    if (num_users <= 0 || num_items <= 0 || d_in <= 0 || d_out <= 0)
        throw ConfigError("model dimensions must be positive");
    if (hidden.empty() || hidden.back() != static_cast<std::size_t>(d_out))
        throw ConfigError("last tower layer width must equal d_out");
    if (fusion != FusionMode::None && num_clusters <= 0)
        throw ConfigError("interest fusion requires a clustering");
    TwoTowerModelT<S> model;
    model.fusion = fusion;
    model.num_users = num_users;
    model.num_items = num_items;
    model.num_clusters = fusion == FusionMode::None ? 0 : num_clusters;
    model.d_in = d_in;
    model.d_interest = fusion == FusionMode::Concat ? d_interest : 0;
    model.d_out = d_out;

    model.user_embeddings.resize(num_users, d_in);
    model.item_embeddings.resize(num_items, d_in);
    if (fusion == FusionMode::Concat) {
        model.w1.resize(num_clusters, d_interest);
        model.w2.resize(d_interest + d_in, d_in);
    }
    if (fusion == FusionMode::Attention) model.cluster_embeddings.resize(num_clusters, d_out);
    auto build_tower = [&](Tower<S>& tower) {
        Eigen::Index in = d_in;
        for (std::size_t width : hidden) {
            tower.weights.emplace_back(in, static_cast<Eigen::Index>(width));
            tower.biases.emplace_back(MatrixX<S>::Zero(1, static_cast<Eigen::Index>(width)));
            in = static_cast<Eigen::Index>(width);
        }
    };
    build_tower(model.user_tower);
    build_tower(model.item_tower);

    for_each_block(model, [&](const std::string& name, MatrixX<S>& block) {
        auto rng = make_rng(derive_seed(seed, detail::name_tag(name)));
        bool is_bias = name.find(".b") != std::string::npos;
        bool is_table = name == "user_embeddings" || name == "item_embeddings" ||
                        name == "cluster_embeddings";
        if (is_bias) {
            block.setZero();
            return;
        }
        double stddev = is_table ? 0.01 : std::sqrt(2.0 / static_cast<double>(block.rows()));
        std::normal_distribution<double> normal(0.0, stddev);
        for (Eigen::Index r = 0; r < block.rows(); ++r)
            for (Eigen::Index c = 0; c < block.cols(); ++c)
                block(r, c) = static_cast<S>(normal(rng));
    });
    return model;
}

// A model-shaped container of zeros; used for gradients and optimizer state.
template <typename S>
TwoTowerModelT<S> zero_like(const TwoTowerModelT<S>& model) {
    TwoTowerModelT<S> zeros = model;
    for_each_block(zeros, [](const std::string&, MatrixX<S>& m) { m.setZero(); });
    return zeros;
}

template <typename S>
void set_zero(TwoTowerModelT<S>& grads) {
    for_each_block(grads, [](const std::string&, MatrixX<S>& m) { m.setZero(); });
}

template <typename S>
S score(const RowVectorX<S>& e_u, const RowVectorX<S>& e_i) {
    if (e_u.size() != e_i.size()) throw DataError("score: dimension mismatch");
    return e_u.dot(e_i);
}

// softmax over <e_u, cluster_embedding_j> for all clusters j.
template <typename S>
RowVectorX<S> attention_weights(const TwoTowerModelT<S>& model, const RowVectorX<S>& e_u) {
    if (model.fusion != FusionMode::Attention)
        throw ConfigError("attention weights require fusion=attention");
    RowVectorX<S> logits = e_u * model.cluster_embeddings.transpose();
    S max_logit = logits.maxCoeff();
    RowVectorX<S> exps = (logits.array() - max_logit).exp();
    return exps / exps.sum();
}

template <typename S>
S score_attention(const TwoTowerModelT<S>& model, const RowVectorX<S>& e_u,
                  const RowVectorX<S>& e_i, std::uint32_t item_cluster) {
    if (static_cast<Eigen::Index>(item_cluster) >= model.num_clusters)
        throw DataError("score_attention: unknown item cluster");
    RowVectorX<S> alpha = attention_weights(model, e_u);
    return alpha[item_cluster] * score<S>(e_u, e_i);
}

// Mean of softplus(s) - y*s (the stable closed form of binary cross entropy
// on a logit s and a {0,1} label y).
template <typename S>
S bce_loss(const std::vector<S>& logits, const std::vector<S>& labels) {
    if (logits.size() != labels.size() || logits.empty())
        throw DataError("bce_loss: bad batch shapes");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double s = static_cast<double>(logits[i]);
        double softplus = std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
        total += softplus - static_cast<double>(labels[i]) * s;
    }
    return static_cast<S>(total / static_cast<double>(logits.size()));
}

namespace detail {

template <typename S>
struct TowerCache {
    std::vector<MatrixX<S>> inputs;  // A_l, layer inputs; inputs[0] is the tower input
    std::vector<MatrixX<S>> pre;     // S_l = A_l W_l + b_l
    std::vector<MatrixX<S>> masks;   // inverted-dropout masks for hidden layers
};

// Bernoulli keep-mask scaled by 1/keep, drawn by comparing raw 64-bit draws
// against keep * 2^64.
template <typename S>
void fill_dropout_mask(MatrixX<S>& mask, S rate, std::mt19937_64& rng) {
    const double keep = 1.0 - static_cast<double>(rate);
    const S scale = static_cast<S>(1.0 / keep);
    const std::uint64_t threshold =
        static_cast<std::uint64_t>(keep * 18446744073709551616.0);
    for (Eigen::Index r = 0; r < mask.rows(); ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
            mask(r, c) = rng() < threshold ? scale : S(0);
}

template <typename S>
MatrixX<S> tower_forward(const Tower<S>& tower, MatrixX<S> input, S dropout_rate,
                         bool train_mode, std::mt19937_64& rng, TowerCache<S>* cache) {
    const std::size_t layers = tower.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        if (cache) cache->inputs.push_back(input);
        MatrixX<S> pre = input * tower.weights[l];
        pre.rowwise() += tower.biases[l].row(0);
        if (l + 1 < layers) {
            if (cache) cache->pre.push_back(pre);
            MatrixX<S> act = pre.cwiseMax(S(0));
            if (train_mode && dropout_rate > S(0)) {
                MatrixX<S> mask(act.rows(), act.cols());
                fill_dropout_mask(mask, dropout_rate, rng);
                act = act.cwiseProduct(mask);
                if (cache) cache->masks.push_back(std::move(mask));
            } else if (cache) {
                cache->masks.emplace_back();
            }
            input = std::move(act);
        } else {
            input = std::move(pre);
        }
    }
    return input;
}

// Backpropagates d_out through the tower, accumulating weight/bias gradients,
// and returns the gradient w.r.t. the tower input.
template <typename S>
MatrixX<S> tower_backward(const Tower<S>& tower, const TowerCache<S>& cache,
                          MatrixX<S> d_output, Tower<S>& grad) {
    for (std::size_t l = tower.weights.size(); l-- > 0;) {
        MatrixX<S> d_pre;
        if (l + 1 < tower.weights.size()) {
            d_pre = d_output.cwiseProduct(
                (cache.pre[l].array() > S(0)).template cast<S>().matrix());
            if (cache.masks[l].size() > 0) d_pre = d_pre.cwiseProduct(cache.masks[l]);
        } else {
            d_pre = std::move(d_output);
        }
        grad.weights[l].noalias() += cache.inputs[l].transpose() * d_pre;
        grad.biases[l].row(0) += d_pre.colwise().sum();
        d_output.noalias() = d_pre * tower.weights[l].transpose();
    }
    return d_output;
}

}  // namespace detail

// One training batch: `users[p]` is the positive's user; `items` holds
// 1 + negatives entries per positive in positive-major order; `labels`
// aligns with `items`.
struct TrainBatch {
    std::vector<std::uint32_t> users;
    std::vector<std::uint32_t> items;
    std::vector<float> labels;
    std::size_t negatives = 0;
};

// Forward pass over a batch, in double accumulation for the loss; when
// `grads` is non-null, also accumulates analytic gradients of the mean BCE
// into it. `item_cluster` is required in attention mode. Dropout draws come
// from `mask_seed` alone, so a (seed, epoch, step) chain reproduces runs.
template <typename S>
S batch_loss_and_grad(const TwoTowerModelT<S>& model, const TrainBatch& batch,
                      const std::vector<InterestProfile>& profiles,
                      const std::vector<std::uint32_t>* item_cluster, S dropout_rate,
                      bool train_mode, std::uint64_t mask_seed, TwoTowerModelT<S>* grads) {
    using Matrix = MatrixX<S>;
    const Eigen::Index B = static_cast<Eigen::Index>(batch.users.size());
    const Eigen::Index group = static_cast<Eigen::Index>(1 + batch.negatives);
    const Eigen::Index R = static_cast<Eigen::Index>(batch.items.size());
    if (B == 0 || R != B * group || batch.labels.size() != batch.items.size())
        throw DataError("batch_loss_and_grad: inconsistent batch shapes");
    if (model.fusion == FusionMode::Attention && item_cluster == nullptr)
        throw DataError("batch_loss_and_grad: attention mode needs item clusters");

    auto rng = make_rng(mask_seed);

    // User side.
    Matrix x_u(B, model.d_in);
    for (Eigen::Index p = 0; p < B; ++p)
        x_u.row(p) = model.user_embeddings.row(batch.users[p]);
    Matrix fused, z;
    const Matrix* tower_in = &x_u;
    if (model.fusion == FusionMode::Concat) {
        z = Matrix::Zero(B, model.d_interest);
        for (Eigen::Index p = 0; p < B; ++p) {
            const InterestProfile& eta = profiles.at(batch.users[p]);
            for (const auto& [c, w] : eta.weights)
                z.row(p) += static_cast<S>(w) * model.w1.row(c);
        }
        Matrix concat(B, model.d_interest + model.d_in);
        concat.leftCols(model.d_interest) = z;
        concat.rightCols(model.d_in) = x_u;
        fused = concat * model.w2;
        // Stash the concat input for the w2 gradient.
        z = std::move(concat);
        tower_in = &fused;
    }
    detail::TowerCache<S> user_cache;
    Matrix e_u = detail::tower_forward(model.user_tower, *tower_in, dropout_rate, train_mode,
                                       rng, grads ? &user_cache : nullptr);

    // Item side.
    Matrix x_i(R, model.d_in);
    for (Eigen::Index r = 0; r < R; ++r)
        x_i.row(r) = model.item_embeddings.row(batch.items[r]);
    detail::TowerCache<S> item_cache;
    Matrix e_i = detail::tower_forward(model.item_tower, x_i, dropout_rate, train_mode, rng,
                                       grads ? &item_cache : nullptr);

    // Attention table.
    Matrix alpha;
    if (model.fusion == FusionMode::Attention) {
        Matrix t = e_u * model.cluster_embeddings.transpose();
        alpha.resize(B, model.num_clusters);
        for (Eigen::Index p = 0; p < B; ++p) {
            S max_logit = t.row(p).maxCoeff();
            alpha.row(p) = (t.row(p).array() - max_logit).exp();
            alpha.row(p) /= alpha.row(p).sum();
        }
    }

    // Logits and loss.
    double total_loss = 0.0;
    std::vector<S> dot(R), logit_grad(grads ? R : 0);
    for (Eigen::Index r = 0; r < R; ++r) {
        Eigen::Index p = r / group;
        double d = static_cast<double>(e_u.row(p).dot(e_i.row(r)));
        dot[r] = static_cast<S>(d);
        double s = d;
        if (model.fusion == FusionMode::Attention)
            s *= static_cast<double>(alpha(p, (*item_cluster)[batch.items[r]]));
        double y = batch.labels[r];
        total_loss += std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))) - y * s;
        if (grads) {
            double sigma = s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
            logit_grad[r] = static_cast<S>((sigma - y) / static_cast<double>(R));
        }
    }
    S loss = static_cast<S>(total_loss / static_cast<double>(R));
    if (!grads) return loss;

    // Backward: logits -> embeddings -> towers -> tables.
    Matrix d_e_u = Matrix::Zero(B, model.d_out);
    Matrix d_e_i = Matrix::Zero(R, model.d_out);
    Matrix d_alpha;
    if (model.fusion == FusionMode::Attention) d_alpha = Matrix::Zero(B, model.num_clusters);
    for (Eigen::Index r = 0; r < R; ++r) {
        Eigen::Index p = r / group;
        S g = logit_grad[r];
        if (model.fusion == FusionMode::Attention) {
            std::uint32_t c = (*item_cluster)[batch.items[r]];
            S a = alpha(p, c);
            d_e_u.row(p) += g * a * e_i.row(r);
            d_e_i.row(r) = g * a * e_u.row(p);
            d_alpha(p, c) += g * dot[r];
        } else {
            d_e_u.row(p) += g * e_i.row(r);
            d_e_i.row(r) = g * e_u.row(p);
        }
    }
    if (model.fusion == FusionMode::Attention) {
        // Softmax backward: dT = alpha .* (dAlpha - rowsum(dAlpha .* alpha)).
        Matrix weighted = d_alpha.cwiseProduct(alpha);
        Matrix d_t(alpha.rows(), alpha.cols());
        for (Eigen::Index p = 0; p < B; ++p) {
            S row_sum = weighted.row(p).sum();
            d_t.row(p) = alpha.row(p).cwiseProduct(
                d_alpha.row(p) - RowVectorX<S>::Constant(alpha.cols(), row_sum));
        }
        d_e_u.noalias() += d_t * model.cluster_embeddings;
        grads->cluster_embeddings.noalias() += d_t.transpose() * e_u;
    }

    Matrix d_user_in = detail::tower_backward(model.user_tower, user_cache, std::move(d_e_u),
                                              grads->user_tower);
    Matrix d_item_in = detail::tower_backward(model.item_tower, item_cache, std::move(d_e_i),
                                              grads->item_tower);

    if (model.fusion == FusionMode::Concat) {
        // z currently holds the concat input [W1*eta | x_u].
        grads->w2.noalias() += z.transpose() * d_user_in;
        Matrix d_concat = d_user_in * model.w2.transpose();
        for (Eigen::Index p = 0; p < B; ++p) {
            const InterestProfile& eta = profiles.at(batch.users[p]);
            for (const auto& [c, w] : eta.weights)
                grads->w1.row(c) +=
                    static_cast<S>(w) * d_concat.row(p).leftCols(model.d_interest);
            grads->user_embeddings.row(batch.users[p]) +=
                d_concat.row(p).rightCols(model.d_in);
        }
    } else {
        for (Eigen::Index p = 0; p < B; ++p)
            grads->user_embeddings.row(batch.users[p]) += d_user_in.row(p);
    }
    for (Eigen::Index r = 0; r < R; ++r)
        grads->item_embeddings.row(batch.items[r]) += d_item_in.row(r);
    return loss;
}

// Uniform negatives from the complement of the user's engaged items;
// duplicates within one draw are rejection-resampled.
std::vector<std::uint32_t> sample_negatives(const BipartiteGraph& bg, std::uint32_t user,
                                            std::size_t n, std::mt19937_64& rng);

// Decoupled AdamW on one flat block. `t` is the 1-based step count shared by
// the whole optimizer.
template <typename S>
void adamw_flat_step(S* param, const S* grad, S* m, S* v, std::size_t n, double lr,
                     double weight_decay, double beta1, double beta2, double eps,
                     std::size_t t) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        double g = static_cast<double>(grad[i]);
        double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
        double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
        m[i] = static_cast<S>(mi);
        v[i] = static_cast<S>(vi);
        double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps) +
                        lr * weight_decay * static_cast<double>(param[i]);
        param[i] = static_cast<S>(static_cast<double>(param[i]) - update);
    }
}

template <typename S>
struct AdamWStateT {
    TwoTowerModelT<S> m, v;
    std::size_t t = 0;
};

template <typename S>
AdamWStateT<S> make_adamw_state(const TwoTowerModelT<S>& model) {
    return {zero_like(model), zero_like(model), 0};
}

template <typename S>
void adamw_step(TwoTowerModelT<S>& model, const TwoTowerModelT<S>& grads,
                AdamWStateT<S>& state, double lr, double weight_decay,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    ++state.t;
    std::vector<MatrixX<S>*> params, ms, vs;
    std::vector<const MatrixX<S>*> gs;
    for_each_block(model, [&](const std::string&, MatrixX<S>& b) { params.push_back(&b); });
    for_each_block(grads, [&](const std::string&, const MatrixX<S>& b) { gs.push_back(&b); });
    for_each_block(state.m, [&](const std::string&, MatrixX<S>& b) { ms.push_back(&b); });
    for_each_block(state.v, [&](const std::string&, MatrixX<S>& b) { vs.push_back(&b); });
    for (std::size_t i = 0; i < params.size(); ++i)
        adamw_flat_step(params[i]->data(), gs[i]->data(), ms[i]->data(), vs[i]->data(),
                        static_cast<std::size_t>(params[i]->size()), lr, weight_decay, beta1,
                        beta2, eps, state.t);
}

// Eval-mode user embedding for one user (no dropout).
template <typename S>
RowVectorX<S> user_forward(const TwoTowerModelT<S>& model, std::uint32_t user,
                           const InterestProfile* eta) {
    if (static_cast<Eigen::Index>(user) >= model.num_users)
        throw DataError("user_forward: user index out of range");
    RowVectorX<S> x = model.user_embeddings.row(user);
    if (model.fusion == FusionMode::Concat) {
        if (eta == nullptr) throw DataError("user_forward: concat fusion needs a profile");
        RowVectorX<S> z = RowVectorX<S>::Zero(model.d_interest);
        for (const auto& [c, w] : eta->weights) z += static_cast<S>(w) * model.w1.row(c);
        RowVectorX<S> concat(model.d_interest + model.d_in);
        concat << z, x;
        x = concat * model.w2;
    }
    auto rng = make_rng(0);
    return detail::tower_forward<S>(model.user_tower, x, S(0), false, rng, nullptr);
}

template <typename S>
RowVectorX<S> item_forward(const TwoTowerModelT<S>& model, std::uint32_t item) {
    if (static_cast<Eigen::Index>(item) >= model.num_items)
        throw DataError("item_forward: item index out of range");
    MatrixX<S> x = model.item_embeddings.row(item);
    auto rng = make_rng(0);
    return detail::tower_forward<S>(model.item_tower, x, S(0), false, rng, nullptr);
}

// Eval-mode embeddings for every user / item, computed as whole-table GEMMs.
template <typename S>
MatrixX<S> all_user_embeddings(const TwoTowerModelT<S>& model,
                               const std::vector<InterestProfile>& profiles) {
    MatrixX<S> input = model.user_embeddings;
    if (model.fusion == FusionMode::Concat) {
        if (profiles.size() != static_cast<std::size_t>(model.num_users))
            throw DataError("all_user_embeddings: profile table size mismatch");
        MatrixX<S> concat(model.num_users, model.d_interest + model.d_in);
        concat.setZero();
        for (Eigen::Index u = 0; u < model.num_users; ++u) {
            for (const auto& [c, w] : profiles[u].weights)
                concat.row(u).leftCols(model.d_interest) +=
                    static_cast<S>(w) * model.w1.row(c);
            concat.row(u).rightCols(model.d_in) = model.user_embeddings.row(u);
        }
        input = concat * model.w2;
    }
    auto rng = make_rng(0);
    return detail::tower_forward<S>(model.user_tower, std::move(input), S(0), false, rng,
                                    nullptr);
}

template <typename S>
MatrixX<S> all_item_embeddings(const TwoTowerModelT<S>& model) {
    auto rng = make_rng(0);
    return detail::tower_forward<S>(model.item_tower, model.item_embeddings, S(0), false,
                                    rng, nullptr);
}

// Binary model file: provenance comment (optional), a text header line
//   d_in=<..> d_out=<..> K=<..> fusion=<mode>
// then one record per block in for_each_block order: u32 name length, name
// bytes, u64 element count, count little-endian float32 values. All shapes
// are reconstructed from the header plus block sizes.
void save_model(const TwoTowerModel& model, const std::string& path,
                const std::string& provenance = "");
TwoTowerModel load_model(const std::string& path);

// Raw binary matrix: three little-endian int32 (rows, cols, 1), then
// rows*cols little-endian float32, row-major.
void export_embeddings(const MatrixX<float>& matrix, const std::string& path);
MatrixX<float> load_embeddings(const std::string& path);

}  // namespace uic
