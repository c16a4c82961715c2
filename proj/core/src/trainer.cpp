#include "uic/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "uic/metrics.hpp"
#include "uic/retrieval.hpp"
#include "uic/rng.hpp"

namespace uic {
namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566ull;  // "shuf"
constexpr std::uint64_t kNegativeTag = 0x6e656773ull;  // "negs"
constexpr std::uint64_t kDropoutTag = 0x64726f70ull;   // "drop"

std::uint64_t step_key(std::size_t epoch, std::size_t step) {
    return (static_cast<std::uint64_t>(epoch) << 32) | static_cast<std::uint64_t>(step);
}

std::vector<std::vector<std::uint32_t>> group_by_user(const std::vector<Interaction>& set,
                                                      std::uint32_t num_users) {
    std::vector<std::vector<std::uint32_t>> grouped(num_users);
    for (const auto& x : set) grouped[x.user].push_back(x.item);
    for (auto& items : grouped) std::sort(items.begin(), items.end());
    return grouped;
}

}  // namespace

double validation_recall(const TwoTowerModel& model,
                         const std::vector<InterestProfile>& profiles,
                         const BipartiteGraph& train_graph,
                         const std::vector<Interaction>& relevant_set, std::size_t k,
                         bool cosine, const std::vector<std::uint32_t>* item_cluster) {
    Scorer scorer = build_scorer(model, profiles, cosine, item_cluster);
    auto relevant = group_by_user(relevant_set, train_graph.num_users);
    double total = 0.0;
    std::size_t counted = 0;
    for (std::uint32_t u = 0; u < train_graph.num_users; ++u) {
        if (relevant[u].empty()) continue;
        RankedList list = full_scan_topk(scorer, u, train_graph.items_of(u), k);
        total += recall_at_k(list.items, relevant[u], k);
        ++counted;
    }
    if (counted == 0) throw DataError("validation_recall: no users with relevant items");
    return total / static_cast<double>(counted);
}

TrainResult train(TwoTowerModel model, const BipartiteGraph& train_graph,
                  const std::vector<Interaction>& train_set,
                  const std::vector<Interaction>& val_set,
                  const std::vector<InterestProfile>& profiles, const Clustering* clustering,
                  const TrainSettings& settings) {
    using clock = std::chrono::steady_clock;
    if (train_set.empty()) throw DataError("train: empty training set");
    if (model.fusion == FusionMode::Attention && clustering == nullptr)
        throw DataError("train: attention fusion needs a clustering");

    const std::vector<std::uint32_t>* item_cluster =
        model.fusion == FusionMode::Attention ? &clustering->assignment : nullptr;
    const std::size_t group = 1 + settings.negatives;

    TrainResult result;
    TwoTowerModel grads = zero_like(model);
    AdamWStateT<float> opt_state = make_adamw_state(model);

    std::vector<std::uint32_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    bool have_checkpoint = false;
    std::size_t bad_evals = 0;
    std::size_t last_epoch = 0;
    bool stopped_early = false;

    for (std::size_t epoch = 1; epoch <= settings.max_epochs; ++epoch) {
        auto epoch_begin = clock::now();
        auto shuffle_rng = make_rng(derive_seed(settings.seed, kShuffleTag, epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t row_count = 0;
        std::size_t steps = (train_set.size() + settings.batch_size - 1) / settings.batch_size;
        for (std::size_t step = 0; step < steps; ++step) {
            std::size_t begin = step * settings.batch_size;
            std::size_t end = std::min(begin + settings.batch_size, train_set.size());
            TrainBatch batch;
            batch.negatives = settings.negatives;
            batch.users.reserve(end - begin);
            batch.items.reserve((end - begin) * group);
            batch.labels.reserve((end - begin) * group);
            auto neg_rng = make_rng(derive_seed(settings.seed, kNegativeTag,
                                                step_key(epoch, step)));
            for (std::size_t p = begin; p < end; ++p) {
                const Interaction& positive = train_set[order[p]];
                batch.users.push_back(positive.user);
                batch.items.push_back(positive.item);
                batch.labels.push_back(1.0f);
                for (std::uint32_t negative :
                     sample_negatives(train_graph, positive.user, settings.negatives, neg_rng)) {
                    batch.items.push_back(negative);
                    batch.labels.push_back(0.0f);
                }
            }
            set_zero(grads);
            float loss = batch_loss_and_grad(
                model, batch, profiles, item_cluster, static_cast<float>(settings.dropout),
                true, derive_seed(settings.seed, kDropoutTag, step_key(epoch, step)), &grads);
            if (!std::isfinite(loss))
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + " step " + std::to_string(step));
            adamw_step(model, grads, opt_state, settings.lr, settings.weight_decay);
            loss_sum += static_cast<double>(loss) * static_cast<double>(batch.items.size());
            row_count += batch.items.size();
        }

        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.loss = loss_sum / static_cast<double>(row_count);
        last_epoch = epoch;

        if (epoch % settings.eval_every == 0) {
            double recall = validation_recall(model, profiles, train_graph, val_set,
                                              settings.val_k, settings.cosine, item_cluster);
            entry.evaluated = true;
            entry.val_recall = recall;
            if (!have_checkpoint || recall > result.best_val_recall) {
                result.best_val_recall = recall;
                result.best_epoch = epoch;
                result.model = model;
                have_checkpoint = true;
                bad_evals = 0;
            } else {
                ++bad_evals;
            }
        }
        entry.seconds = std::chrono::duration<double>(clock::now() - epoch_begin).count();
        result.log.push_back(entry);
        if (entry.evaluated && bad_evals >= settings.patience) {
            stopped_early = true;
            break;
        }
    }

    if (!have_checkpoint) {
        // max_epochs below the first evaluation point: score the final state.
        double recall = validation_recall(model, profiles, train_graph, val_set,
                                          settings.val_k, settings.cosine, item_cluster);
        result.best_val_recall = recall;
        result.best_epoch = last_epoch;
        result.model = std::move(model);
        if (!result.log.empty()) {
            result.log.back().evaluated = true;
            result.log.back().val_recall = recall;
        }
    }
    result.stop_epoch = stopped_early
                            ? result.best_epoch + settings.patience * settings.eval_every
                            : last_epoch;
    return result;
}

void save_train_log(const TrainResult& result, const std::string& path,
                    const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    out << "epoch\tloss\tseconds\tval_recall\n";
    char buf[128];
    for (const auto& entry : result.log) {
        if (entry.evaluated)
            std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.3f\t%.6f", entry.epoch, entry.loss,
                          entry.seconds, entry.val_recall);
        else
            std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.3f\t", entry.epoch, entry.loss,
                          entry.seconds);
        out << buf << "\n";
    }
    out << "# best_epoch=" << result.best_epoch << " stop_epoch=" << result.stop_epoch
        << " best_val_recall=" << result.best_val_recall << "\n";
}

}  // namespace uic
