#include "uic/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "uic/artifact.hpp"
#include "uic/errors.hpp"

namespace uic {
namespace {

void normalize_rows(MatrixX<float>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        float norm = m.row(r).norm();
        if (norm > 0.0f) m.row(r) /= norm;
    }
}

}  // namespace

Scorer build_scorer(const TwoTowerModel& model, const std::vector<InterestProfile>& profiles,
                    bool cosine, const std::vector<std::uint32_t>* item_cluster) {
    Scorer scorer;
    scorer.users = all_user_embeddings(model, profiles);
    scorer.items = all_item_embeddings(model);
    if (model.fusion == FusionMode::Attention) {
        if (item_cluster == nullptr ||
            item_cluster->size() != static_cast<std::size_t>(model.num_items))
            throw ConfigError("attention scoring needs the item cluster assignment");
        scorer.item_cluster = *item_cluster;
        // Attention weights come from the raw tower outputs, matching the
        // training-time score path; cosine normalization happens after.
        scorer.alpha.resize(model.num_users, model.num_clusters);
        for (Eigen::Index u = 0; u < model.num_users; ++u) {
            RowVectorX<float> e_u = scorer.users.row(u);
            scorer.alpha.row(u) = attention_weights(model, e_u);
        }
    }
    if (cosine) {
        normalize_rows(scorer.users);
        normalize_rows(scorer.items);
    }
    return scorer;
}

Scorer scorer_from_embeddings(MatrixX<float> users, MatrixX<float> items, bool cosine) {
    if (users.cols() != items.cols())
        throw DataError("scorer: user/item embedding widths differ");
    Scorer scorer;
    scorer.users = std::move(users);
    scorer.items = std::move(items);
    if (cosine) {
        normalize_rows(scorer.users);
        normalize_rows(scorer.items);
    }
    return scorer;
}

RankedList topk_among(const Scorer& scorer, std::uint32_t user,
                      std::span<const std::uint32_t> candidates,
                      std::span<const std::uint32_t> exclude, std::size_t k,
                      std::size_t* scored) {
    std::vector<std::pair<float, std::uint32_t>> pool;
    pool.reserve(candidates.size());
    for (std::uint32_t item : candidates) {
        if (std::binary_search(exclude.begin(), exclude.end(), item)) continue;
        pool.emplace_back(scorer.score(user, item), item);
    }
    if (scored) *scored += pool.size();
    std::size_t take = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take),
                      pool.end(), [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    RankedList out;
    out.user = user;
    out.items.reserve(take);
    out.scores.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        out.scores.push_back(pool[r].first);
        out.items.push_back(pool[r].second);
    }
    return out;
}

RankedList full_scan_topk(const Scorer& scorer, std::uint32_t user,
                          std::span<const std::uint32_t> exclude, std::size_t k,
                          std::size_t* scored) {
    // The inner loop matches the pooled strategies candidate-for-candidate,
    // so timing ratios measure pool size and nothing else.
    std::vector<std::pair<float, std::uint32_t>> pool;
    pool.reserve(scorer.num_items());
    for (std::uint32_t item = 0; item < scorer.num_items(); ++item) {
        if (std::binary_search(exclude.begin(), exclude.end(), item)) continue;
        pool.emplace_back(scorer.score(user, item), item);
    }
    if (scored) *scored += pool.size();
    std::size_t take = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take),
                      pool.end(), [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    RankedList out;
    out.user = user;
    for (std::size_t r = 0; r < take; ++r) {
        out.scores.push_back(pool[r].first);
        out.items.push_back(pool[r].second);
    }
    return out;
}

std::vector<std::uint32_t> select_clusters(const InterestProfile& profile, std::size_t n,
                                           std::size_t num_clusters, const std::string& mode,
                                           std::mt19937_64& rng) {
    if (n == 0) throw ConfigError("select_clusters: n must be >= 1");
    n = std::min(n, num_clusters);
    std::vector<std::uint32_t> selected;
    selected.reserve(n);
    std::vector<char> taken(num_clusters, 0);

    if (mode == "top") {
        std::vector<std::pair<std::uint32_t, double>> ranked(profile.weights.begin(),
                                                             profile.weights.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (const auto& [c, w] : ranked) {
            if (selected.size() == n) break;
            selected.push_back(c);
            taken[c] = 1;
        }
    } else if (mode == "sample") {
        std::vector<std::pair<std::uint32_t, double>> remaining(profile.weights.begin(),
                                                                profile.weights.end());
        while (selected.size() < n && !remaining.empty()) {
            double total = 0.0;
            for (const auto& [c, w] : remaining) total += w;
            std::uniform_real_distribution<double> uniform(0.0, total);
            double target = uniform(rng);
            std::size_t pick = remaining.size() - 1;
            double cumulative = 0.0;
            for (std::size_t j = 0; j < remaining.size(); ++j) {
                cumulative += remaining[j].second;
                if (target < cumulative) {
                    pick = j;
                    break;
                }
            }
            selected.push_back(remaining[pick].first);
            taken[remaining[pick].first] = 1;
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    } else {
        throw ConfigError("select_clusters: mode must be 'top' or 'sample'");
    }

    // Pad beyond the profile support so that selecting every cluster is
    // always reachable (and equals a full scan).
    for (std::uint32_t c = 0; selected.size() < n && c < num_clusters; ++c)
        if (!taken[c]) selected.push_back(c);
    return selected;
}

RankedList cluster_topk(const Scorer& scorer, std::uint32_t user,
                        const InterestProfile& profile,
                        const std::vector<std::vector<std::uint32_t>>& members,
                        std::size_t n_clusters, const std::string& mode,
                        std::mt19937_64& rng, std::span<const std::uint32_t> exclude,
                        std::size_t k, std::size_t* scored) {
    std::vector<std::uint32_t> selected =
        select_clusters(profile, n_clusters, members.size(), mode, rng);
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t c : selected)
        candidates.insert(candidates.end(), members[c].begin(), members[c].end());
    return topk_among(scorer, user, candidates, exclude, k, scored);
}

TimingReport benchmark_inference(
    const std::string& strategy, const std::vector<std::uint32_t>& users,
    std::size_t repetitions,
    const std::function<RankedList(std::uint32_t, std::size_t*)>& retrieve) {
    if (users.empty()) throw DataError("benchmark_inference: no users");
    if (repetitions == 0) throw ConfigError("benchmark_inference: repetitions must be >= 1");
    using clock = std::chrono::steady_clock;

    std::vector<double> totals(repetitions, 0.0);
    std::vector<std::vector<double>> per_user(repetitions);
    std::size_t candidates = 0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        per_user[rep].reserve(users.size());
        std::size_t* counter = rep == 0 ? &candidates : nullptr;
        for (std::uint32_t u : users) {
            auto begin = clock::now();
            RankedList list = retrieve(u, counter);
            auto end = clock::now();
            (void)list;
            double seconds = std::chrono::duration<double>(end - begin).count();
            per_user[rep].push_back(seconds);
            totals[rep] += seconds;
        }
    }
    std::vector<std::size_t> order(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) order[r] = r;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return totals[a] < totals[b]; });
    std::size_t median_rep = order[repetitions / 2];

    std::vector<double> latencies = per_user[median_rep];
    std::nth_element(latencies.begin(), latencies.begin() + latencies.size() / 2,
                     latencies.end());
    TimingReport report;
    report.strategy = strategy;
    report.users = users.size();
    report.total_seconds = totals[median_rep];
    report.median_seconds = latencies[latencies.size() / 2];
    report.candidates_scored = candidates;
    return report;
}

void save_recs(const std::vector<RankedList>& lists, const std::string& path,
               const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    char buf[64];
    for (const auto& list : lists) {
        out << list.user << "\t";
        for (std::size_t r = 0; r < list.items.size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%u:%.4f", list.items[r], list.scores[r]);
            out << (r ? "," : "") << buf;
        }
        out << "\n";
    }
}

std::vector<RankedList> load_recs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open recommendations: " + path);
    std::vector<RankedList> lists;
    std::string line;
    while (next_content_line(in, line)) {
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw DataError(path + ": expected user<TAB>items");
        RankedList list;
        list.user = static_cast<std::uint32_t>(std::stoul(line.substr(0, tab)));
        std::size_t pos = tab + 1;
        while (pos < line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            std::size_t colon = line.find(':', pos);
            if (colon == std::string::npos || colon >= comma)
                throw DataError(path + ": expected item:score entries");
            list.items.push_back(
                static_cast<std::uint32_t>(std::stoul(line.substr(pos, colon - pos))));
            list.scores.push_back(std::stof(line.substr(colon + 1, comma - colon - 1)));
            pos = comma + 1;
        }
        lists.push_back(std::move(list));
    }
    return lists;
}

void save_timing(const TimingReport& report, const std::string& path,
                 const std::string& provenance) {
    nlohmann::json j;
    if (!provenance.empty()) j["_provenance"] = provenance;
    j["strategy"] = report.strategy;
    j["users"] = report.users;
    j["total_seconds"] = report.total_seconds;
    j["median_seconds"] = report.median_seconds;
    j["candidates_scored"] = report.candidates_scored;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace uic
