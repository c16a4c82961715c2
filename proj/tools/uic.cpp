#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uic/artifact.hpp"
#include "uic/config.hpp"
#include "uic/dataset.hpp"
#include "uic/errors.hpp"
#include "uic/eval.hpp"
#include "uic/graph.hpp"
#include "uic/interest.hpp"
#include "uic/kmeans.hpp"
#include "uic/louvain.hpp"
#include "uic/model.hpp"
#include "uic/retrieval.hpp"
#include "uic/rng.hpp"
#include "uic/trainer.hpp"

namespace {

using namespace uic;

constexpr std::uint64_t kClusterSelectTag = 0x73656c63;  // cluster selection streams

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

PipelineConfig resolve_config(const CommonArgs& args) {
    PipelineConfig config =
        args.config_path.empty() ? PipelineConfig{} : load_config(args.config_path);
    apply_overrides(config, args.overrides);
    validate_config(config);
    std::filesystem::create_directories(config.artifacts_dir);
    return config;
}

std::string provenance(const PipelineConfig& config, const std::string& tool,
                       std::uint64_t seed) {
    return provenance_line(tool, digest_hex(canonical_config(config)), seed);
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!std::filesystem::exists(path))
        throw DataError("missing artifact " + path + "; run `uic " + producer + "` first");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TrainSettings settings_from(const PipelineConfig& config) {
    TrainSettings settings;
    settings.lr = config.model_lr;
    settings.weight_decay = config.model_weight_decay;
    settings.dropout = config.model_dropout;
    settings.batch_size = config.model_batch_size;
    settings.negatives = config.model_negatives;
    settings.max_epochs = config.model_max_epochs;
    settings.eval_every = config.model_eval_every;
    settings.patience = config.model_patience;
    settings.seed = config.model_seed;
    settings.val_k = 50;  // model selection watches validation Recall@50
    settings.cosine = config.model_similarity == "cosine";
    return settings;
}

int cmd_ingest(const PipelineConfig& config) {
    if (!std::filesystem::exists(config.data_path))
        throw DataError("data file not found: " + config.data_path);
    std::vector<InteractionRecord> records =
        config.data_format == "movielens" ? parse_movielens(config.data_path)
                                          : parse_csv(config.data_path, config.csv_columns);
    Dataset dataset =
        build_dataset(std::move(records), config.min_user_degree, config.min_item_degree);
    save_dataset(dataset, config.dataset_path(), provenance(config, "ingest", config.split.seed));
    std::printf("dataset: users=%u items=%u interactions=%zu\n", dataset.num_users,
                dataset.num_items, dataset.interactions.size());
    std::printf("wrote %s\n", config.dataset_path().c_str());
    return 0;
}

int cmd_cluster(const PipelineConfig& config) {
    require_artifact(config.dataset_path(), "ingest");
    const Dataset dataset = load_dataset(config.dataset_path());
    const BipartiteGraph bipartite =
        build_bipartite(dataset.num_users, dataset.num_items, dataset.interactions);
    const ItemGraph item_graph = project_co_engagement(bipartite);
    const LouvainResult result = louvain(item_graph, config.louvain_resolution,
                                         config.louvain_seed, config.louvain_max_cluster_size);
    save_clustering(result.clustering, config.clustering_path(),
                    provenance(config, "cluster", config.louvain_seed));
    const double q = result.pass_modularity.empty() ? 0.0 : result.pass_modularity.back();
    std::printf("clusters=%u modularity=%.6f passes=%zu\n", result.clustering.num_clusters, q,
                result.pass_modularity.size());
    std::printf("wrote %s\n", config.clustering_path().c_str());
    return 0;
}

int cmd_interest(const PipelineConfig& config) {
    require_artifact(config.dataset_path(), "ingest");
    require_artifact(config.clustering_path(), "cluster");
    const Dataset dataset = load_dataset(config.dataset_path());
    Clustering clustering = load_clustering(config.clustering_path());
    if (clustering.num_items != dataset.num_items)
        throw DataError("clustering does not match dataset; rerun `uic cluster`");

    const Split parts = split(dataset, config.split);
    const BipartiteGraph train_graph =
        build_bipartite(dataset.num_users, dataset.num_items, parts.train);
    const std::vector<InterestProfile> profiles = build_all_profiles(
        train_graph, clustering, config.interest_method, config.interest_damping,
        config.interest_tolerance, config.interest_max_iterations, config.resolved_threads());
    save_profiles(profiles, config.profiles_path(),
                  provenance(config, "interest", config.split.seed));
    std::printf("profiles=%zu clusters=%u method=%s\n", profiles.size(),
                clustering.num_clusters, config.interest_method.c_str());
    std::printf("wrote %s\n", config.profiles_path().c_str());
    return 0;
}

int cmd_train(const PipelineConfig& config) {
    require_artifact(config.dataset_path(), "ingest");
    const Dataset dataset = load_dataset(config.dataset_path());
    const FusionMode fusion = fusion_from_string(config.model_fusion);

    Clustering clustering;
    std::vector<InterestProfile> profiles;
    if (fusion != FusionMode::None) {
        require_artifact(config.clustering_path(), "cluster");
        require_artifact(config.profiles_path(), "interest");
        clustering = load_clustering(config.clustering_path());
        profiles = load_profiles(config.profiles_path());
        for (auto& profile : profiles) profile.num_clusters = clustering.num_clusters;
        if (clustering.num_items != dataset.num_items || profiles.size() != dataset.num_users)
            throw DataError("interest artifacts do not match dataset; rerun `uic interest`");
    }

    const Split parts = split(dataset, config.split);
    const BipartiteGraph train_graph =
        build_bipartite(dataset.num_users, dataset.num_items, parts.train);

    TwoTowerModel model = make_model<float>(
        dataset.num_users, dataset.num_items, clustering.num_clusters, config.model_d_in,
        config.model_d_interest, config.model_d_out, config.model_hidden, fusion,
        config.model_seed);
    const TrainSettings settings = settings_from(config);
    const TrainResult result = train(std::move(model), train_graph, parts.train, parts.val,
                                     profiles, &clustering, settings);

    const std::string prov = provenance(config, "train", config.model_seed);
    save_model(result.model, config.model_path(), prov);
    save_train_log(result, config.train_log_path(), prov);
    export_embeddings(all_user_embeddings(result.model, profiles),
                      config.user_embeddings_path());
    export_embeddings(all_item_embeddings(result.model), config.item_embeddings_path());

    std::printf("best_epoch=%zu stop_epoch=%zu val_recall@%zu=%.6f\n", result.best_epoch,
                result.stop_epoch, settings.val_k, result.best_val_recall);
    std::printf("wrote %s\n", config.model_path().c_str());
    return 0;
}

int cmd_retrieve(const PipelineConfig& config, std::string strategy) {
    if (strategy.empty()) strategy = config.retrieval_strategy;
    if (strategy != "full" && strategy != "cluster" && strategy != "kmeans")
        throw ConfigError("retrieve strategy must be full, cluster, or kmeans");

    require_artifact(config.dataset_path(), "ingest");
    require_artifact(config.model_path(), "train");
    const Dataset dataset = load_dataset(config.dataset_path());
    const TwoTowerModel model = load_model(config.model_path());
    if (model.num_users != static_cast<Eigen::Index>(dataset.num_users) ||
        model.num_items != static_cast<Eigen::Index>(dataset.num_items))
        throw DataError("model does not match dataset; rerun `uic train`");

    const bool needs_clustering =
        strategy == "cluster" || model.fusion == FusionMode::Attention;
    const bool needs_profiles = strategy == "cluster" || model.fusion != FusionMode::None;

    Clustering clustering;
    if (needs_clustering) {
        require_artifact(config.clustering_path(), "cluster");
        clustering = load_clustering(config.clustering_path());
        if (clustering.num_items != dataset.num_items)
            throw DataError("clustering does not match dataset; rerun `uic cluster`");
    }
    std::vector<InterestProfile> profiles;
    if (needs_profiles) {
        require_artifact(config.profiles_path(), "interest");
        profiles = load_profiles(config.profiles_path());
        for (auto& profile : profiles) profile.num_clusters = clustering.num_clusters;
        if (profiles.size() != dataset.num_users)
            throw DataError("profiles do not match dataset; rerun `uic interest`");
    }

    const Split parts = split(dataset, config.split);
    const auto engaged = items_by_user(parts.train, dataset.num_users);
    const bool cosine = config.model_similarity == "cosine";
    const Scorer scorer = build_scorer(
        model, profiles, cosine,
        model.fusion == FusionMode::Attention ? &clustering.assignment : nullptr);

    // Pool precomputation (cluster membership, kmeans fit) happens here, off
    // the clock: the benchmark measures per-user retrieval only.
    std::vector<std::vector<std::uint32_t>> members;
    KmeansModel km;
    if (strategy == "cluster") members = cluster_members(clustering);
    if (strategy == "kmeans") {
        km = kmeans(scorer.items, config.retrieval_kmeans_k, config.retrieval_seed);
        members = kmeans_members(km);
    }

    const std::size_t k = config.retrieval_k;
    auto retrieve = [&](std::uint32_t user, std::size_t* scored) -> RankedList {
        if (strategy == "full") return full_scan_topk(scorer, user, engaged[user], k, scored);
        if (strategy == "cluster") {
            auto rng = make_rng(derive_seed(config.retrieval_seed, kClusterSelectTag, user));
            return cluster_topk(scorer, user, profiles[user], members,
                                config.retrieval_n_clusters, config.retrieval_mode, rng,
                                engaged[user], k, scored);
        }
        return kmeans_topk(scorer, user, km, members, config.retrieval_n_clusters,
                           engaged[user], k, scored);
    };

    std::vector<std::uint32_t> users(dataset.num_users);
    for (std::uint32_t u = 0; u < dataset.num_users; ++u) users[u] = u;
    TimingReport timing =
        benchmark_inference(strategy, users, config.retrieval_repetitions, retrieve);

    std::vector<RankedList> recs;
    recs.reserve(users.size());
    for (const std::uint32_t u : users) recs.push_back(retrieve(u, nullptr));

    const std::string prov = provenance(config, "retrieve", config.retrieval_seed);
    save_recs(recs, config.recs_path(strategy), prov);
    save_timing(timing, config.timing_path(strategy), prov);
    std::printf("strategy=%s users=%zu total_seconds=%.4f median_seconds=%.6f scored=%zu\n",
                strategy.c_str(), timing.users, timing.total_seconds, timing.median_seconds,
                timing.candidates_scored);
    std::printf("wrote %s\n", config.recs_path(strategy).c_str());
    return 0;
}

int cmd_evaluate(const PipelineConfig& config, std::string strategy, bool deciles,
                 bool popularity, const std::string& reference_path) {
    if (strategy.empty()) strategy = config.retrieval_strategy;
    if (strategy != "full" && strategy != "cluster" && strategy != "kmeans" &&
        strategy != "most_popular")
        throw ConfigError("evaluate strategy must be full, cluster, kmeans, or most_popular");

    require_artifact(config.dataset_path(), "ingest");
    const Dataset dataset = load_dataset(config.dataset_path());
    const Split parts = split(dataset, config.split);
    const auto relevant = items_by_user(parts.test, dataset.num_users);

    std::vector<RankedList> recs;
    if (strategy == "most_popular") {
        recs = most_popular_baseline(parts.train, dataset.num_users, dataset.num_items,
                                     config.retrieval_k);
    } else {
        require_artifact(config.recs_path(strategy), "retrieve --strategy " + strategy);
        recs = load_recs(config.recs_path(strategy));
    }

    EvalReport report = evaluate(strategy, recs, relevant, config.eval_k_values);
    report.per_user_path = config.per_user_path(strategy);
    if (std::filesystem::exists(config.timing_path(strategy)))
        report.timing_attachment = read_file(config.timing_path(strategy));

    const std::string prov = provenance(config, "evaluate", config.split.seed);
    save_per_user_tsv(report, config.per_user_path(strategy), prov);
    save_report_json(report, config.report_path(strategy), prov);

    if (deciles) {
        const EvalReport reference =
            reference_path.empty() ? report : load_per_user_tsv(reference_path);
        const std::size_t target_k =
            std::find(config.eval_k_values.begin(), config.eval_k_values.end(), 50) !=
                    config.eval_k_values.end()
                ? 50
                : config.eval_k_values.back();
        const auto degrees = user_degrees(parts.train, dataset.num_users);
        const auto rows = engagement_decile_report(report, reference, degrees,
                                                   "ndcg@" + std::to_string(target_k));
        save_decile_csv(rows, config.decile_path(strategy), prov);
        std::printf("wrote %s\n", config.decile_path(strategy).c_str());
    }
    if (popularity) {
        const PopularityReport pop =
            popularity_report(parts.train, dataset.num_items, recs, relevant);
        save_popularity_csv(pop, config.popularity_path(strategy), prov);
        std::printf("wrote %s\n", config.popularity_path(strategy).c_str());
    }

    std::ostringstream line;
    line << "strategy=" << strategy;
    for (const auto& [key, value] : report.means) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), " %s=%.4f", key.c_str(), value);
        line << buf;
    }
    line << " evaluated=" << report.rows.size() << " excluded=" << report.excluded_users;
    std::printf("%s\n", line.str().c_str());
    std::printf("wrote %s\n", config.report_path(strategy).c_str());
    return 0;
}

int cmd_stability(const PipelineConfig& config) {
    require_artifact(config.dataset_path(), "ingest");
    const Dataset dataset = load_dataset(config.dataset_path());
    const std::vector<double> aris =
        stability_study(dataset, config.stability_fractions, config.louvain_resolution,
                        config.louvain_seed, config.louvain_max_cluster_size);
    save_stability_json(aris, config.stability_fractions, config.stability_path(),
                        provenance(config, "stability", config.louvain_seed));
    std::ostringstream line;
    line << "ari:";
    for (const double v : aris) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.4f", v);
        line << buf;
    }
    std::printf("%s\n", line.str().c_str());
    std::printf("wrote %s\n", config.stability_path().c_str());
    return 0;
}

int cmd_grid(const PipelineConfig& config) {
    require_artifact(config.dataset_path(), "ingest");
    const Dataset dataset = load_dataset(config.dataset_path());
    const FusionMode fusion = fusion_from_string(config.model_fusion);

    Clustering clustering;
    std::vector<InterestProfile> profiles;
    if (fusion != FusionMode::None) {
        require_artifact(config.clustering_path(), "cluster");
        require_artifact(config.profiles_path(), "interest");
        clustering = load_clustering(config.clustering_path());
        profiles = load_profiles(config.profiles_path());
        for (auto& profile : profiles) profile.num_clusters = clustering.num_clusters;
    }
    const Split parts = split(dataset, config.split);
    const BipartiteGraph train_graph =
        build_bipartite(dataset.num_users, dataset.num_items, parts.train);

    struct GridRow {
        double lr, dropout, val_recall;
        std::size_t best_epoch;
    };
    std::vector<GridRow> rows;
    std::size_t best_index = 0;
    for (const double lr : config.grid_lr) {
        for (const double dropout : config.grid_dropout) {
            TrainSettings settings = settings_from(config);
            settings.lr = lr;
            settings.dropout = dropout;
            TwoTowerModel model = make_model<float>(
                dataset.num_users, dataset.num_items, clustering.num_clusters,
                config.model_d_in, config.model_d_interest, config.model_d_out,
                config.model_hidden, fusion, config.model_seed);
            const TrainResult result = train(std::move(model), train_graph, parts.train,
                                             parts.val, profiles, &clustering, settings);
            rows.push_back({lr, dropout, result.best_val_recall, result.best_epoch});
            if (rows.back().val_recall > rows[best_index].val_recall)
                best_index = rows.size() - 1;
            std::printf("lr=%g dropout=%g val_recall@50=%.6f best_epoch=%zu\n", lr, dropout,
                        result.best_val_recall, result.best_epoch);
        }
    }

    std::ofstream out(config.grid_path());
    if (!out) throw DataError("cannot write " + config.grid_path());
    out << provenance(config, "grid", config.model_seed) << "\n";
    out << "lr\tdropout\tbest_epoch\tval_recall@50\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%g\t%g\t%zu\t%.6f\n", row.lr, row.dropout,
                      row.best_epoch, row.val_recall);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "# best lr=%g dropout=%g val_recall@50=%.6f\n",
                  rows[best_index].lr, rows[best_index].dropout, rows[best_index].val_recall);
    out << buf;
    std::printf("best: lr=%g dropout=%g val_recall@50=%.6f\n", rows[best_index].lr,
                rows[best_index].dropout, rows[best_index].val_recall);
    std::printf("wrote %s\n", config.grid_path().c_str());
    return 0;
}

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "Flat key = value config file");
    sub->add_option("--set", args.overrides, "Override entries as key=value")
        ->allow_extra_args(false);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interest-clustered retrieval pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string strategy;
    bool deciles = false, popularity = false;
    std::string reference_path;

    CLI::App* ingest = app.add_subcommand("ingest", "Parse and filter raw interactions");
    CLI::App* cluster = app.add_subcommand("cluster", "Cluster the item co-engagement graph");
    CLI::App* interest = app.add_subcommand("interest", "Compute per-user interest profiles");
    CLI::App* train = app.add_subcommand("train", "Train the two-tower model");
    CLI::App* retrieve = app.add_subcommand("retrieve", "Produce top-K recommendations");
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score recommendations on the test split");
    CLI::App* stability = app.add_subcommand("stability", "Clustering stability across snapshots");
    CLI::App* grid = app.add_subcommand("grid", "Sweep lr x dropout by validation recall");
    for (CLI::App* sub : {ingest, cluster, interest, train, retrieve, evaluate, stability, grid})
        add_common(sub, args);
    retrieve->add_option("--strategy", strategy, "full | cluster | kmeans");
    evaluate->add_option("--strategy", strategy,
                         "full | cluster | kmeans | most_popular");
    evaluate->add_flag("--deciles", deciles, "Also write the engagement-decile CSV");
    evaluate->add_flag("--popularity", popularity, "Also write the popularity-skew CSV");
    evaluate->add_option("--reference", reference_path,
                         "Per-user metrics TSV used as the decile baseline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const uic::PipelineConfig config = resolve_config(args);
        if (ingest->parsed()) return cmd_ingest(config);
        if (cluster->parsed()) return cmd_cluster(config);
        if (interest->parsed()) return cmd_interest(config);
        if (train->parsed()) return cmd_train(config);
        if (retrieve->parsed()) return cmd_retrieve(config, strategy);
        if (evaluate->parsed())
            return cmd_evaluate(config, strategy, deciles, popularity, reference_path);
        if (stability->parsed()) return cmd_stability(config);
        if (grid->parsed()) return cmd_grid(config);
        return 1;
    } catch (const uic::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const uic::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const uic::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
