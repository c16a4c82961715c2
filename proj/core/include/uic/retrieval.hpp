#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uic/interest.hpp"
#include "uic/model.hpp"

namespace uic {

// Top-K recommendations for one user: items in rank order with non-increasing
// scores, never containing the user's excluded (train) items.
struct RankedList {
    std::uint32_t user = 0;
    std::vector<std::uint32_t> items;
    std::vector<float> scores;
};

// Precomputed user/item embeddings plus, in attention mode, the per-user
// softmax table over cluster embeddings and the item -> cluster map. Scoring
// needs nothing else from the model, so retrieval can run off exported
// artifacts alone.
struct Scorer {
    MatrixX<float> users;                     // U x d
    MatrixX<float> items;                     // I x d
    MatrixX<float> alpha;                     // U x K, attention mode only
    std::vector<std::uint32_t> item_cluster;  // attention mode only

    std::uint32_t num_items() const { return static_cast<std::uint32_t>(items.rows()); }
    float score(std::uint32_t user, std::uint32_t item) const {
        float s = users.row(user).dot(items.row(item));
        if (alpha.size() > 0) s *= alpha(user, item_cluster[item]);
        return s;
    }
};

// Builds the scorer from a trained model (profiles feed the concat fusion).
// cosine=true L2-normalizes embedding rows after any attention-weight
// computation. Attention mode additionally needs the item -> cluster map.
Scorer build_scorer(const TwoTowerModel& model, const std::vector<InterestProfile>& profiles,
                    bool cosine, const std::vector<std::uint32_t>* item_cluster = nullptr);

// Builds the scorer from exported embedding matrices (vanilla / concat modes;
// attention scoring state does not round-trip through plain matrices).
Scorer scorer_from_embeddings(MatrixX<float> users, MatrixX<float> items, bool cosine);

// Exact top-k over the candidate item list (ties toward the lower item
// index); `exclude` must be sorted. Adds the number of scored candidates to
// *scored when given.
RankedList topk_among(const Scorer& scorer, std::uint32_t user,
                      std::span<const std::uint32_t> candidates,
                      std::span<const std::uint32_t> exclude, std::size_t k,
                      std::size_t* scored = nullptr);

// Top-k over every item not in `exclude`.
RankedList full_scan_topk(const Scorer& scorer, std::uint32_t user,
                          std::span<const std::uint32_t> exclude, std::size_t k,
                          std::size_t* scored = nullptr);

// mode "top": the n clusters with the largest profile weight (ties toward the
// lower cluster id). mode "sample": weighted sampling without replacement by
// profile weight. Either way, when n exceeds the profile's support the
// selection pads with the remaining cluster ids in ascending order, so
// n >= num_clusters selects every cluster.
std::vector<std::uint32_t> select_clusters(const InterestProfile& profile, std::size_t n,
                                           std::size_t num_clusters, const std::string& mode,
                                           std::mt19937_64& rng);

// Pool = members of the selected clusters minus `exclude`, then exact top-k
// inside the pool.
RankedList cluster_topk(const Scorer& scorer, std::uint32_t user,
                        const InterestProfile& profile,
                        const std::vector<std::vector<std::uint32_t>>& members,
                        std::size_t n_clusters, const std::string& mode,
                        std::mt19937_64& rng, std::span<const std::uint32_t> exclude,
                        std::size_t k, std::size_t* scored = nullptr);

// Wall-clock cost of running `retrieve` for every listed user. Runs
// `repetitions` sweeps on the calling thread; reports the sweep with the
// median total, its median per-user latency, and the candidates scored in
// one sweep. Embedding precomputation happens before this call and is not
// timed.
struct TimingReport {
    std::string strategy;
    std::size_t users = 0;
    double total_seconds = 0.0;
    double median_seconds = 0.0;
    std::size_t candidates_scored = 0;
};

TimingReport benchmark_inference(
    const std::string& strategy, const std::vector<std::uint32_t>& users,
    std::size_t repetitions,
    const std::function<RankedList(std::uint32_t, std::size_t*)>& retrieve);

// Recommendations file: `user<TAB>item:score,item:score,...`, scores to 4
// decimals. Timing report: a flat JSON object.
void save_recs(const std::vector<RankedList>& lists, const std::string& path,
               const std::string& provenance = "");
std::vector<RankedList> load_recs(const std::string& path);
void save_timing(const TimingReport& report, const std::string& path,
                 const std::string& provenance = "");

}  // namespace uic
