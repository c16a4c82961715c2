#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "uic/dataset.hpp"

namespace uic {

// Every pipeline knob, filled from a flat `key = value` config file with
// dotted section prefixes. Unknown keys and out-of-range values raise
// ConfigError.
struct PipelineConfig {
    // data.*
    std::string data_path = "data/ml-1m/ratings.dat";
    std::string data_format = "movielens";  // movielens | csv
    std::size_t min_user_degree = 20;
    std::size_t min_item_degree = 1;
    CsvColumns csv_columns{"user_id", "item_id", "", ""};

    // split.*
    SplitSpec split{0.8, 0.1, 0.1, 13};

    // louvain.*
    double louvain_resolution = 1.1;
    std::uint64_t louvain_seed = 13;
    std::size_t louvain_max_cluster_size = 0;  // 0 = uncapped

    // interest.*
    std::string interest_method = "ppr";  // ppr | counts
    double interest_damping = 0.85;
    double interest_tolerance = 1e-8;
    std::size_t interest_max_iterations = 200;

    // model.*
    std::size_t model_d_in = 64;
    std::size_t model_d_interest = 32;
    std::size_t model_d_out = 64;
    std::vector<std::size_t> model_hidden = {128, 64};
    std::string model_fusion = "concat";    // none | concat | attention
    std::string model_similarity = "dot";   // dot | cosine
    double model_lr = 0.001;
    double model_weight_decay = 0.0005;
    double model_dropout = 0.1;
    std::size_t model_batch_size = 4096;
    std::size_t model_negatives = 4;
    std::size_t model_max_epochs = 60;
    std::size_t model_eval_every = 5;
    std::size_t model_patience = 5;
    std::uint64_t model_seed = 13;

    // retrieval.*
    std::string retrieval_strategy = "cluster";  // full | cluster | kmeans
    std::size_t retrieval_n_clusters = 250;
    std::string retrieval_mode = "top";  // top | sample
    std::size_t retrieval_k = 50;
    std::uint64_t retrieval_seed = 13;
    std::size_t retrieval_repetitions = 3;
    std::size_t retrieval_kmeans_k = 250;

    // eval.*
    std::vector<std::size_t> eval_k_values = {10, 50};

    // stability.*
    std::vector<double> stability_fractions = {0.99, 0.98, 0.97, 0.96, 0.95};

    // grid.*
    std::vector<double> grid_lr = {0.0005, 0.001, 0.005};
    std::vector<double> grid_dropout = {0.1, 0.3, 0.5};

    unsigned threads = 0;  // 0 = hardware concurrency
    std::string artifacts_dir = "artifacts";

    // Derived artifact locations.
    std::string dataset_path() const;
    std::string clustering_path() const;
    std::string profiles_path() const;
    std::string model_path() const;
    std::string train_log_path() const;
    std::string user_embeddings_path() const;
    std::string item_embeddings_path() const;
    std::string kmeans_path() const;
    std::string recs_path(const std::string& strategy) const;
    std::string timing_path(const std::string& strategy) const;
    std::string report_path(const std::string& strategy) const;
    std::string per_user_path(const std::string& strategy) const;
    std::string decile_path(const std::string& strategy) const;
    std::string popularity_path(const std::string& strategy) const;
    std::string stability_path() const;
    std::string grid_path() const;

    unsigned resolved_threads() const;
};

// Applies a single `key=value` assignment; unknown key or bad value raises
// ConfigError.
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

// Reads a flat config file ('#' comments and blank lines ignored) and applies
// the entries over the defaults.
PipelineConfig load_config(const std::string& path);

// `--set key=value` override strings, applied in order after the file.
void apply_overrides(PipelineConfig& config, const std::vector<std::string>& overrides);

// Range/enum checks across all fields; called by the CLI after overrides.
void validate_config(const PipelineConfig& config);

// Canonical `key = value` dump covering every key, in fixed order. Equal
// configs produce equal dumps; feeds the artifact provenance digest.
std::string canonical_config(const PipelineConfig& config);

}  // namespace uic
