#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uic/graph.hpp"
#include "uic/interest.hpp"
#include "uic/louvain.hpp"
#include "uic/model.hpp"

namespace uic {

struct TrainSettings {
    double lr = 0.001;
    double weight_decay = 0.0005;
    double dropout = 0.1;
    std::size_t batch_size = 4096;
    std::size_t negatives = 4;
    std::size_t max_epochs = 60;
    std::size_t eval_every = 5;
    std::size_t patience = 5;
    std::uint64_t seed = 13;
    std::size_t val_k = 50;  // early stopping watches Recall@val_k
    bool cosine = false;
};

struct TrainLogEntry {
    std::size_t epoch = 0;
    double loss = 0.0;
    double seconds = 0.0;
    bool evaluated = false;
    double val_recall = 0.0;
};

struct TrainResult {
    TwoTowerModel model;  // best checkpoint by validation recall
    std::vector<TrainLogEntry> log;
    std::size_t best_epoch = 0;
    std::size_t stop_epoch = 0;
    double best_val_recall = 0.0;
};

// Mini-batch BCE training with uniform negative sampling and AdamW. Each
// epoch reshuffles the positives under a per-epoch seed; negatives and
// dropout draw from per-(epoch, step) seeds, so a (config, seed) pair fully
// determines the result. Validation Recall@val_k is measured every
// `eval_every` epochs (over users with validation items, candidates = all
// items minus the user's train items); `patience` evaluations without
// improvement stop the run and the best checkpoint is returned.
// `clustering` is required for attention fusion and ignored otherwise.
TrainResult train(TwoTowerModel model, const BipartiteGraph& train_graph,
                  const std::vector<Interaction>& train_set,
                  const std::vector<Interaction>& val_set,
                  const std::vector<InterestProfile>& profiles, const Clustering* clustering,
                  const TrainSettings& settings);

// Mean Recall@k over users with at least one interaction in `relevant_set`,
// ranking every item outside the user's train items. `item_cluster` is
// required for attention-fusion models.
double validation_recall(const TwoTowerModel& model,
                         const std::vector<InterestProfile>& profiles,
                         const BipartiteGraph& train_graph,
                         const std::vector<Interaction>& relevant_set, std::size_t k,
                         bool cosine, const std::vector<std::uint32_t>* item_cluster = nullptr);

// Per-epoch TSV: epoch, mean loss, wall seconds, validation recall (blank on
// epochs without an evaluation), then summary comment lines.
void save_train_log(const TrainResult& result, const std::string& path,
                    const std::string& provenance = "");

}  // namespace uic
