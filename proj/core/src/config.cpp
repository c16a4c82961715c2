#include "uic/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "uic/errors.hpp"

namespace uic {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
        std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a non-negative integer: '" + value + "'");
    }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) parts.push_back(trim(part));
    if (!parts.empty() && parts.back().empty()) parts.pop_back();
    return parts;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (const auto& part : split_commas(value)) out.push_back(parse_size(key, part));
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& part : split_commas(value)) out.push_back(parse_double(key, part));
    return out;
}

void require_choice(const std::string& key, const std::string& value,
                    std::initializer_list<const char*> choices) {
    for (const char* c : choices)
        if (value == c) return;
    std::string msg = "config key '" + key + "': '" + value + "' is not one of {";
    bool first = true;
    for (const char* c : choices) {
        if (!first) msg += ", ";
        msg += c;
        first = false;
    }
    throw ConfigError(msg + "}");
}

std::string join(const std::vector<std::size_t>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    return out.str();
}

std::string join(const std::vector<double>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ",";
        std::ostringstream one;
        one << values[i];
        out << one.str();
    }
    return out.str();
}

}  // namespace

void apply_config_entry(PipelineConfig& c, const std::string& key, const std::string& value) {
    if (key == "data.path") c.data_path = value;
    else if (key == "data.format") { require_choice(key, value, {"movielens", "csv"}); c.data_format = value; }
    else if (key == "data.min_user_degree") c.min_user_degree = parse_size(key, value);
    else if (key == "data.min_item_degree") c.min_item_degree = parse_size(key, value);
    else if (key == "data.user_col") c.csv_columns.user = value;
    else if (key == "data.item_col") c.csv_columns.item = value;
    else if (key == "data.value_col") c.csv_columns.value = value;
    else if (key == "data.timestamp_col") c.csv_columns.timestamp = value;
    else if (key == "split.train") c.split.train_fraction = parse_double(key, value);
    else if (key == "split.val") c.split.val_fraction = parse_double(key, value);
    else if (key == "split.test") c.split.test_fraction = parse_double(key, value);
    else if (key == "split.seed") c.split.seed = parse_u64(key, value);
    else if (key == "louvain.resolution") c.louvain_resolution = parse_double(key, value);
    else if (key == "louvain.seed") c.louvain_seed = parse_u64(key, value);
    else if (key == "louvain.max_cluster_size") c.louvain_max_cluster_size = parse_size(key, value);
    else if (key == "interest.method") { require_choice(key, value, {"ppr", "counts"}); c.interest_method = value; }
    else if (key == "interest.damping") c.interest_damping = parse_double(key, value);
    else if (key == "interest.tolerance") c.interest_tolerance = parse_double(key, value);
    else if (key == "interest.max_iterations") c.interest_max_iterations = parse_size(key, value);
    else if (key == "model.d_in") c.model_d_in = parse_size(key, value);
    else if (key == "model.d_interest") c.model_d_interest = parse_size(key, value);
    else if (key == "model.d_out") c.model_d_out = parse_size(key, value);
    else if (key == "model.hidden") c.model_hidden = parse_size_list(key, value);
    else if (key == "model.fusion") { require_choice(key, value, {"none", "concat", "attention"}); c.model_fusion = value; }
    else if (key == "model.similarity") { require_choice(key, value, {"dot", "cosine"}); c.model_similarity = value; }
    else if (key == "model.lr") c.model_lr = parse_double(key, value);
    else if (key == "model.weight_decay") c.model_weight_decay = parse_double(key, value);
    else if (key == "model.dropout") c.model_dropout = parse_double(key, value);
    else if (key == "model.batch_size") c.model_batch_size = parse_size(key, value);
    else if (key == "model.negatives") c.model_negatives = parse_size(key, value);
    else if (key == "model.max_epochs") c.model_max_epochs = parse_size(key, value);
    else if (key == "model.eval_every") c.model_eval_every = parse_size(key, value);
    else if (key == "model.patience") c.model_patience = parse_size(key, value);
    else if (key == "model.seed") c.model_seed = parse_u64(key, value);
    else if (key == "retrieval.strategy") { require_choice(key, value, {"full", "cluster", "kmeans"}); c.retrieval_strategy = value; }
    else if (key == "retrieval.n_clusters") c.retrieval_n_clusters = parse_size(key, value);
    else if (key == "retrieval.mode") { require_choice(key, value, {"top", "sample"}); c.retrieval_mode = value; }
    else if (key == "retrieval.k") c.retrieval_k = parse_size(key, value);
    else if (key == "retrieval.seed") c.retrieval_seed = parse_u64(key, value);
    else if (key == "retrieval.repetitions") c.retrieval_repetitions = parse_size(key, value);
    else if (key == "retrieval.kmeans_k") c.retrieval_kmeans_k = parse_size(key, value);
    else if (key == "eval.k_values") c.eval_k_values = parse_size_list(key, value);
    else if (key == "stability.fractions") c.stability_fractions = parse_double_list(key, value);
    else if (key == "grid.lr") c.grid_lr = parse_double_list(key, value);
    else if (key == "grid.dropout") c.grid_dropout = parse_double_list(key, value);
    else if (key == "threads") c.threads = static_cast<unsigned>(parse_u64(key, value));
    else if (key == "artifacts.dir") c.artifacts_dir = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    PipelineConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        try {
            apply_config_entry(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

void apply_overrides(PipelineConfig& config, const std::vector<std::string>& overrides) {
    for (const auto& entry : overrides) {
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + entry + "'");
        apply_config_entry(config, trim(entry.substr(0, eq)), trim(entry.substr(eq + 1)));
    }
}

void validate_config(const PipelineConfig& c) {
    auto in_open_01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_open_01(c.split.train_fraction) || !in_open_01(c.split.val_fraction) ||
        !in_open_01(c.split.test_fraction))
        throw ConfigError("split fractions must lie in (0,1)");
    double sum = c.split.train_fraction + c.split.val_fraction + c.split.test_fraction;
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("split fractions must sum to 1");
    if (c.louvain_resolution <= 0.0) throw ConfigError("louvain.resolution must be positive");
    if (!in_open_01(c.interest_damping)) throw ConfigError("interest.damping must lie in (0,1)");
    if (c.interest_tolerance <= 0.0) throw ConfigError("interest.tolerance must be positive");
    if (c.interest_max_iterations == 0) throw ConfigError("interest.max_iterations must be >= 1");
    if (c.model_d_in == 0 || c.model_d_out == 0)
        throw ConfigError("model dimensions must be >= 1");
    if (c.model_fusion != "none" && c.model_d_interest == 0)
        throw ConfigError("model.d_interest must be >= 1 when fusion is enabled");
    if (c.model_lr <= 0.0) throw ConfigError("model.lr must be positive");
    if (c.model_weight_decay < 0.0) throw ConfigError("model.weight_decay must be >= 0");
    if (c.model_dropout < 0.0 || c.model_dropout >= 1.0)
        throw ConfigError("model.dropout must lie in [0,1)");
    if (c.model_batch_size == 0) throw ConfigError("model.batch_size must be >= 1");
    if (c.model_max_epochs == 0) throw ConfigError("model.max_epochs must be >= 1");
    if (c.model_eval_every == 0) throw ConfigError("model.eval_every must be >= 1");
    if (c.model_patience == 0) throw ConfigError("model.patience must be >= 1");
    if (c.retrieval_n_clusters == 0) throw ConfigError("retrieval.n_clusters must be >= 1");
    if (c.retrieval_k == 0) throw ConfigError("retrieval.k must be >= 1");
    if (c.retrieval_repetitions == 0) throw ConfigError("retrieval.repetitions must be >= 1");
    if (c.retrieval_kmeans_k == 0) throw ConfigError("retrieval.kmeans_k must be >= 1");
    if (c.eval_k_values.empty()) throw ConfigError("eval.k_values must be non-empty");
    for (std::size_t k : c.eval_k_values)
        if (k == 0) throw ConfigError("eval.k_values entries must be >= 1");
    if (c.stability_fractions.size() < 2)
        throw ConfigError("stability.fractions needs at least 2 entries");
    for (double f : c.stability_fractions)
        if (!(f > 0.0 && f <= 1.0))
            throw ConfigError("stability.fractions entries must lie in (0,1]");
    if (c.grid_lr.empty() || c.grid_dropout.empty())
        throw ConfigError("grid.lr and grid.dropout must be non-empty");
}

std::string canonical_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "data.path = " << c.data_path << "\n"
        << "data.format = " << c.data_format << "\n"
        << "data.min_user_degree = " << c.min_user_degree << "\n"
        << "data.min_item_degree = " << c.min_item_degree << "\n"
        << "data.user_col = " << c.csv_columns.user << "\n"
        << "data.item_col = " << c.csv_columns.item << "\n"
        << "data.value_col = " << c.csv_columns.value << "\n"
        << "data.timestamp_col = " << c.csv_columns.timestamp << "\n"
        << "split.train = " << c.split.train_fraction << "\n"
        << "split.val = " << c.split.val_fraction << "\n"
        << "split.test = " << c.split.test_fraction << "\n"
        << "split.seed = " << c.split.seed << "\n"
        << "louvain.resolution = " << c.louvain_resolution << "\n"
        << "louvain.seed = " << c.louvain_seed << "\n"
        << "louvain.max_cluster_size = " << c.louvain_max_cluster_size << "\n"
        << "interest.method = " << c.interest_method << "\n"
        << "interest.damping = " << c.interest_damping << "\n"
        << "interest.tolerance = " << c.interest_tolerance << "\n"
        << "interest.max_iterations = " << c.interest_max_iterations << "\n"
        << "model.d_in = " << c.model_d_in << "\n"
        << "model.d_interest = " << c.model_d_interest << "\n"
        << "model.d_out = " << c.model_d_out << "\n"
        << "model.hidden = " << join(c.model_hidden) << "\n"
        << "model.fusion = " << c.model_fusion << "\n"
        << "model.similarity = " << c.model_similarity << "\n"
        << "model.lr = " << c.model_lr << "\n"
        << "model.weight_decay = " << c.model_weight_decay << "\n"
        << "model.dropout = " << c.model_dropout << "\n"
        << "model.batch_size = " << c.model_batch_size << "\n"
        << "model.negatives = " << c.model_negatives << "\n"
        << "model.max_epochs = " << c.model_max_epochs << "\n"
        << "model.eval_every = " << c.model_eval_every << "\n"
        << "model.patience = " << c.model_patience << "\n"
        << "model.seed = " << c.model_seed << "\n"
        << "retrieval.strategy = " << c.retrieval_strategy << "\n"
        << "retrieval.n_clusters = " << c.retrieval_n_clusters << "\n"
        << "retrieval.mode = " << c.retrieval_mode << "\n"
        << "retrieval.k = " << c.retrieval_k << "\n"
        << "retrieval.seed = " << c.retrieval_seed << "\n"
        << "retrieval.repetitions = " << c.retrieval_repetitions << "\n"
        << "retrieval.kmeans_k = " << c.retrieval_kmeans_k << "\n"
        << "eval.k_values = " << join(c.eval_k_values) << "\n"
        << "stability.fractions = " << join(c.stability_fractions) << "\n"
        << "grid.lr = " << join(c.grid_lr) << "\n"
        << "grid.dropout = " << join(c.grid_dropout) << "\n";
    // threads and artifacts.dir stay out of the dump: neither changes any
    // artifact's content, so they must not change the provenance digest.
    return out.str();
}

unsigned PipelineConfig::resolved_threads() const {
    if (threads != 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

std::string PipelineConfig::dataset_path() const { return artifacts_dir + "/dataset.tsv"; }
std::string PipelineConfig::clustering_path() const { return artifacts_dir + "/clusters.tsv"; }
std::string PipelineConfig::profiles_path() const { return artifacts_dir + "/profiles.tsv"; }
std::string PipelineConfig::model_path() const { return artifacts_dir + "/model.bin"; }
std::string PipelineConfig::train_log_path() const { return artifacts_dir + "/train_log.tsv"; }
std::string PipelineConfig::user_embeddings_path() const { return artifacts_dir + "/user_embeddings.bin"; }
std::string PipelineConfig::item_embeddings_path() const { return artifacts_dir + "/item_embeddings.bin"; }
std::string PipelineConfig::kmeans_path() const { return artifacts_dir + "/kmeans.tsv"; }
std::string PipelineConfig::recs_path(const std::string& s) const { return artifacts_dir + "/recs_" + s + ".tsv"; }
std::string PipelineConfig::timing_path(const std::string& s) const { return artifacts_dir + "/timing_" + s + ".json"; }
std::string PipelineConfig::report_path(const std::string& s) const { return artifacts_dir + "/eval_" + s + ".json"; }
std::string PipelineConfig::per_user_path(const std::string& s) const { return artifacts_dir + "/eval_" + s + "_users.tsv"; }
std::string PipelineConfig::decile_path(const std::string& s) const { return artifacts_dir + "/deciles_" + s + ".csv"; }
std::string PipelineConfig::popularity_path(const std::string& s) const { return artifacts_dir + "/popularity_" + s + ".csv"; }
std::string PipelineConfig::stability_path() const { return artifacts_dir + "/stability.json"; }
std::string PipelineConfig::grid_path() const { return artifacts_dir + "/grid.tsv"; }

}  // namespace uic
