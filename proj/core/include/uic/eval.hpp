#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uic/dataset.hpp"
#include "uic/retrieval.hpp"

namespace uic {

// Per-user metric row; metric vectors align with the report's k_values.
struct EvalRow {
    std::uint32_t user = 0;
    std::vector<double> precision, recall, ndcg;
};

struct EvalReport {
    std::string strategy;
    std::vector<std::size_t> k_values;
    std::vector<EvalRow> rows;  // users with non-empty relevant sets only
    std::map<std::string, double> means;   // "precision@10" -> mean over rows
    std::map<std::string, double> stddev;  // population std across seeds; zero for one run
    std::size_t excluded_users = 0;        // users skipped for empty relevant sets
    std::string per_user_path;
    std::string timing_attachment;  // raw timing JSON embedded in the report when present
};

// Items per user from an interaction subset, each list sorted ascending.
std::vector<std::vector<std::uint32_t>> items_by_user(
    const std::vector<Interaction>& interactions, std::uint32_t num_users);

// Scores recommendation lists against per-user relevant sets. Users whose
// relevant set is empty are excluded and counted.
EvalReport evaluate(const std::string& strategy, const std::vector<RankedList>& recs,
                    const std::vector<std::vector<std::uint32_t>>& relevant,
                    const std::vector<std::size_t>& k_values);

// Across-seed aggregation: means of the per-run means, with population
// standard deviation. Runs must agree on strategy and k_values.
EvalReport aggregate_reports(const std::vector<EvalReport>& reports);

// One global popularity ranking (train count desc, item id asc), filtered of
// each user's train items and truncated to k.
std::vector<RankedList> most_popular_baseline(const std::vector<Interaction>& train_set,
                                              std::uint32_t num_users, std::uint32_t num_items,
                                              std::size_t k);

// Users sorted by train engagement (ties by user index) and cut into 10
// chunks of equal size +-1, lowest-engagement first; the remainder goes to
// the earliest chunks. Reports each chunk's mean of `metric` (a key of
// EvalRow means, e.g. "ndcg@50") against a reference report on the same
// users.
struct DecileRow {
    std::size_t decile = 0;  // 0 = lightest users
    std::size_t users = 0;
    double mean = 0.0;
    double reference_mean = 0.0;
    double relative_gain = 0.0;  // (mean - reference) / reference
};
std::vector<DecileRow> engagement_decile_report(const EvalReport& report,
                                                const EvalReport& reference,
                                                const std::vector<std::uint32_t>& train_degrees,
                                                const std::string& metric);
void save_decile_csv(const std::vector<DecileRow>& rows, const std::string& path,
                     const std::string& provenance = "");

// Popularity skew summary: cumulative train-interaction share of items ranked
// by popularity, plus mean popularity rank (1-based) of recommended items vs
// held-out relevant items.
struct PopularityReport {
    std::vector<double> cumulative_share;  // by popularity rank
    double top10_share = 0.0;
    double mean_rank_recommended = 0.0;
    double mean_rank_heldout = 0.0;
};
PopularityReport popularity_report(const std::vector<Interaction>& train_set,
                                   std::uint32_t num_items,
                                   const std::vector<RankedList>& recs,
                                   const std::vector<std::vector<std::uint32_t>>& relevant);
void save_popularity_csv(const PopularityReport& report, const std::string& path,
                         const std::string& provenance = "");

// Clusters each temporal-prefix snapshot of the dataset and returns the ARI
// between consecutive snapshots, computed over the items present in both.
std::vector<double> stability_study(const Dataset& dataset,
                                    const std::vector<double>& fractions, double resolution,
                                    std::uint64_t seed, std::size_t max_cluster_size = 0);

void save_report_json(const EvalReport& report, const std::string& path,
                      const std::string& provenance = "");
void save_per_user_tsv(const EvalReport& report, const std::string& path,
                       const std::string& provenance = "");
// Rebuilds rows and k_values from a per-user table, e.g. to serve as a
// decile reference.
EvalReport load_per_user_tsv(const std::string& path);
void save_stability_json(const std::vector<double>& aris, const std::vector<double>& fractions,
                         const std::string& path, const std::string& provenance = "");

}  // namespace uic
