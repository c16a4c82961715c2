#include "uic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "uic/artifact.hpp"
#include "uic/errors.hpp"
#include "uic/louvain.hpp"
#include "uic/graph.hpp"
#include "uic/metrics.hpp"

namespace uic {

std::vector<std::vector<std::uint32_t>> items_by_user(
    const std::vector<Interaction>& interactions, std::uint32_t num_users) {
    std::vector<std::vector<std::uint32_t>> out(num_users);
    for (const auto& it : interactions) {
        if (it.user >= num_users) throw DataError("interaction user out of range");
        out[it.user].push_back(it.item);
    }
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
}

namespace {

std::string metric_key(const char* name, std::size_t k) {
    return std::string(name) + "@" + std::to_string(k);
}

}  // namespace

EvalReport evaluate(const std::string& strategy, const std::vector<RankedList>& recs,
                    const std::vector<std::vector<std::uint32_t>>& relevant,
                    const std::vector<std::size_t>& k_values) {
    if (k_values.empty()) throw ConfigError("evaluate: no cutoff values");
    for (const std::size_t k : k_values)
        if (k == 0) throw ConfigError("evaluate: cutoff values must be positive");
    EvalReport report;
    report.strategy = strategy;
    report.k_values = k_values;

    std::vector<double> sums(3 * k_values.size(), 0.0);
    for (const auto& list : recs) {
        if (list.user >= relevant.size()) throw DataError("recommendation user out of range");
        const auto& rel = relevant[list.user];
        if (rel.empty()) {
            ++report.excluded_users;
            continue;
        }
        EvalRow row;
        row.user = list.user;
        for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
            const std::size_t k = k_values[ki];
            const double p = precision_at_k(list.items, rel, k);
            const double r = recall_at_k(list.items, rel, k);
            const double n = ndcg_at_k(list.items, rel, k);
            row.precision.push_back(p);
            row.recall.push_back(r);
            row.ndcg.push_back(n);
            sums[3 * ki] += p;
            sums[3 * ki + 1] += r;
            sums[3 * ki + 2] += n;
        }
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) throw DataError("evaluate: no user has held-out items");

    const double inv = 1.0 / static_cast<double>(report.rows.size());
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
        const std::size_t k = k_values[ki];
        report.means[metric_key("precision", k)] = sums[3 * ki] * inv;
        report.means[metric_key("recall", k)] = sums[3 * ki + 1] * inv;
        report.means[metric_key("ndcg", k)] = sums[3 * ki + 2] * inv;
    }
    for (const auto& [key, value] : report.means) {
        (void)value;
        report.stddev[key] = 0.0;
    }
    return report;
}

EvalReport aggregate_reports(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw DataError("aggregate_reports: no reports");
    EvalReport out;
    out.strategy = reports.front().strategy;
    out.k_values = reports.front().k_values;
    out.excluded_users = reports.front().excluded_users;
    for (const auto& r : reports) {
        if (r.strategy != out.strategy) throw DataError("aggregate_reports: strategy mismatch");
        if (r.k_values != out.k_values) throw DataError("aggregate_reports: cutoff mismatch");
    }
    const double inv = 1.0 / static_cast<double>(reports.size());
    for (const auto& [key, first_value] : reports.front().means) {
        (void)first_value;
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& r : reports) {
            const auto it = r.means.find(key);
            if (it == r.means.end()) throw DataError("aggregate_reports: metric key mismatch");
            sum += it->second;
            sum_sq += it->second * it->second;
        }
        const double mean = sum * inv;
        out.means[key] = mean;
        out.stddev[key] = std::sqrt(std::max(0.0, sum_sq * inv - mean * mean));
    }
    return out;
}

std::vector<RankedList> most_popular_baseline(const std::vector<Interaction>& train_set,
                                              std::uint32_t num_users, std::uint32_t num_items,
                                              std::size_t k) {
    std::vector<std::uint64_t> counts(num_items, 0);
    for (const auto& it : train_set) {
        if (it.item >= num_items) throw DataError("train interaction item out of range");
        ++counts[it.item];
    }
    std::vector<std::uint32_t> order(num_items);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return a < b;
    });

    const auto engaged = items_by_user(train_set, num_users);
    std::vector<RankedList> recs(num_users);
    for (std::uint32_t u = 0; u < num_users; ++u) {
        auto& list = recs[u];
        list.user = u;
        const auto& skip = engaged[u];
        for (const std::uint32_t item : order) {
            if (list.items.size() >= k) break;
            if (std::binary_search(skip.begin(), skip.end(), item)) continue;
            list.items.push_back(item);
            list.scores.push_back(static_cast<float>(counts[item]));
        }
    }
    return recs;
}

std::vector<DecileRow> engagement_decile_report(const EvalReport& report,
                                                const EvalReport& reference,
                                                const std::vector<std::uint32_t>& train_degrees,
                                                const std::string& metric) {
    const auto metric_of = [&](const EvalRow& row,
                               const std::vector<std::size_t>& ks) -> double {
        // metric is "<name>@<k>"; resolve against the row's aligned vectors.
        const auto at = metric.find('@');
        if (at == std::string::npos) throw ConfigError("decile metric must look like ndcg@50");
        const std::string name = metric.substr(0, at);
        const std::size_t k = static_cast<std::size_t>(std::stoull(metric.substr(at + 1)));
        const auto it = std::find(ks.begin(), ks.end(), k);
        if (it == ks.end()) throw ConfigError("decile metric cutoff not evaluated: " + metric);
        const std::size_t ki = static_cast<std::size_t>(it - ks.begin());
        if (name == "precision") return row.precision[ki];
        if (name == "recall") return row.recall[ki];
        if (name == "ndcg") return row.ndcg[ki];
        throw ConfigError("unknown decile metric: " + metric);
    };

    std::vector<std::size_t> ref_row(train_degrees.size(), SIZE_MAX);
    for (std::size_t i = 0; i < reference.rows.size(); ++i) {
        const std::uint32_t u = reference.rows[i].user;
        if (u >= ref_row.size()) throw DataError("reference row user out of range");
        ref_row[u] = i;
    }

    std::vector<std::size_t> order(report.rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const std::uint32_t ua = report.rows[a].user, ub = report.rows[b].user;
        if (ua >= train_degrees.size() || ub >= train_degrees.size())
            throw DataError("evaluated user out of degree range");
        if (train_degrees[ua] != train_degrees[ub]) return train_degrees[ua] < train_degrees[ub];
        return ua < ub;
    });

    const std::size_t n = order.size();
    if (n < 10) throw DataError("decile report needs at least 10 evaluated users");
    const std::size_t base = n / 10, rem = n % 10;
    std::vector<DecileRow> out;
    std::size_t pos = 0;
    for (std::size_t d = 0; d < 10; ++d) {
        const std::size_t size = base + (d < rem ? 1 : 0);
        DecileRow row;
        row.decile = d;
        row.users = size;
        double sum = 0.0, ref_sum = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
            const auto& er = report.rows[order[pos + i]];
            sum += metric_of(er, report.k_values);
            const std::size_t ri = ref_row[er.user];
            if (ri == SIZE_MAX) throw DataError("user missing from reference report");
            ref_sum += metric_of(reference.rows[ri], reference.k_values);
        }
        pos += size;
        row.mean = sum / static_cast<double>(size);
        row.reference_mean = ref_sum / static_cast<double>(size);
        row.relative_gain =
            row.reference_mean > 0.0 ? (row.mean - row.reference_mean) / row.reference_mean : 0.0;
        out.push_back(row);
    }
    return out;
}

void save_decile_csv(const std::vector<DecileRow>& rows, const std::string& path,
                     const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    out << "decile,users,mean,reference_mean,relative_gain\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f,%.6f,%.6f\n", r.decile, r.users, r.mean,
                      r.reference_mean, r.relative_gain);
        out << buf;
    }
}

PopularityReport popularity_report(const std::vector<Interaction>& train_set,
                                   std::uint32_t num_items,
                                   const std::vector<RankedList>& recs,
                                   const std::vector<std::vector<std::uint32_t>>& relevant) {
    if (num_items == 0) throw DataError("popularity report needs items");
    std::vector<std::uint64_t> counts(num_items, 0);
    std::uint64_t total = 0;
    for (const auto& it : train_set) {
        if (it.item >= num_items) throw DataError("train interaction item out of range");
        ++counts[it.item];
        ++total;
    }
    if (total == 0) throw DataError("popularity report needs train interactions");

    std::vector<std::uint32_t> order(num_items);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return a < b;
    });
    std::vector<std::uint32_t> rank(num_items, 0);  // 1-based popularity rank
    for (std::uint32_t pos = 0; pos < num_items; ++pos) rank[order[pos]] = pos + 1;

    PopularityReport report;
    report.cumulative_share.resize(num_items);
    double acc = 0.0;
    for (std::uint32_t pos = 0; pos < num_items; ++pos) {
        acc += static_cast<double>(counts[order[pos]]);
        report.cumulative_share[pos] = acc / static_cast<double>(total);
    }
    const std::size_t top10 = std::max<std::size_t>(1, num_items / 10);
    report.top10_share = report.cumulative_share[top10 - 1];

    double rec_sum = 0.0;
    std::uint64_t rec_n = 0;
    for (const auto& list : recs) {
        for (const std::uint32_t item : list.items) {
            if (item >= num_items) throw DataError("recommended item out of range");
            rec_sum += rank[item];
            ++rec_n;
        }
    }
    double rel_sum = 0.0;
    std::uint64_t rel_n = 0;
    for (const auto& items : relevant) {
        for (const std::uint32_t item : items) {
            if (item >= num_items) throw DataError("held-out item out of range");
            rel_sum += rank[item];
            ++rel_n;
        }
    }
    report.mean_rank_recommended = rec_n ? rec_sum / static_cast<double>(rec_n) : 0.0;
    report.mean_rank_heldout = rel_n ? rel_sum / static_cast<double>(rel_n) : 0.0;
    return report;
}

void save_popularity_csv(const PopularityReport& report, const std::string& path,
                         const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# top10_share=%.6f\n", report.top10_share);
    out << buf;
    std::snprintf(buf, sizeof(buf), "# mean_rank_recommended=%.2f\n",
                  report.mean_rank_recommended);
    out << buf;
    std::snprintf(buf, sizeof(buf), "# mean_rank_heldout=%.2f\n", report.mean_rank_heldout);
    out << buf;
    out << "rank,cumulative_share\n";
    for (std::size_t pos = 0; pos < report.cumulative_share.size(); ++pos) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", pos + 1, report.cumulative_share[pos]);
        out << buf;
    }
}

std::vector<double> stability_study(const Dataset& dataset,
                                    const std::vector<double>& fractions, double resolution,
                                    std::uint64_t seed, std::size_t max_cluster_size) {
    if (fractions.size() < 2) throw ConfigError("stability study needs at least two fractions");
    bool ascending = true, descending = true;
    for (std::size_t i = 1; i < fractions.size(); ++i) {
        if (fractions[i] < fractions[i - 1]) ascending = false;
        if (fractions[i] > fractions[i - 1]) descending = false;
    }
    // Consecutive-snapshot comparisons only make sense on a monotone schedule.
    if (!ascending && !descending)
        throw ConfigError("stability fractions must be monotone");

    struct Snapshot {
        std::vector<std::string> item_ids;  // dense index -> raw id, sorted
        std::vector<std::uint32_t> assignment;
    };
    std::vector<double> aris;
    Snapshot prev;
    bool have_prev = false;
    for (const double fraction : fractions) {
        const Dataset snap_ds = temporal_prefix(dataset, fraction);
        const BipartiteGraph bipartite =
            build_bipartite(snap_ds.num_users, snap_ds.num_items, snap_ds.interactions);
        const ItemGraph item_graph = project_co_engagement(bipartite);
        const LouvainResult result =
            louvain(item_graph, resolution, seed, max_cluster_size);
        Snapshot snap{snap_ds.item_ids, result.clustering.assignment};

        if (have_prev) {
            // Align on raw ids present in both snapshots.
            std::vector<std::uint32_t> a, b;
            std::size_t pi = 0;
            for (std::size_t ci = 0; ci < snap.item_ids.size(); ++ci) {
                const std::string& raw = snap.item_ids[ci];
                while (pi < prev.item_ids.size() && prev.item_ids[pi] < raw) ++pi;
                if (pi < prev.item_ids.size() && prev.item_ids[pi] == raw) {
                    a.push_back(prev.assignment[pi]);
                    b.push_back(snap.assignment[ci]);
                }
            }
            aris.push_back(ari(a, b));
        }
        prev = std::move(snap);
        have_prev = true;
    }
    return aris;
}

void save_report_json(const EvalReport& report, const std::string& path,
                      const std::string& provenance) {
    nlohmann::json doc;
    if (!provenance.empty()) doc["_provenance"] = provenance;
    doc["strategy"] = report.strategy;
    doc["k_values"] = report.k_values;
    doc["means"] = report.means;
    doc["std"] = report.stddev;
    doc["evaluated_users"] = report.rows.size();
    doc["excluded_users"] = report.excluded_users;
    if (!report.per_user_path.empty()) doc["per_user_path"] = report.per_user_path;
    if (!report.timing_attachment.empty()) {
        doc["timing"] = nlohmann::json::parse(report.timing_attachment, nullptr, false);
        if (doc["timing"].is_discarded()) throw DataError("timing attachment is not valid JSON");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << doc.dump(2) << "\n";
}

void save_per_user_tsv(const EvalReport& report, const std::string& path,
                       const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    out << "user";
    for (const std::size_t k : report.k_values)
        out << "\tprecision@" << k << "\trecall@" << k << "\tndcg@" << k;
    out << "\n";
    char buf[64];
    for (const auto& row : report.rows) {
        out << row.user;
        for (std::size_t ki = 0; ki < report.k_values.size(); ++ki) {
            std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\t%.6f", row.precision[ki],
                          row.recall[ki], row.ndcg[ki]);
            out << buf;
        }
        out << "\n";
    }
}

EvalReport load_per_user_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    std::string line;
    if (!next_content_line(in, line)) throw DataError(path + ": missing header row");

    EvalReport report;
    report.per_user_path = path;
    {
        std::istringstream header(line);
        std::string column;
        if (!std::getline(header, column, '\t') || column != "user")
            throw DataError(path + ": header must start with user");
        while (std::getline(header, column, '\t')) {
            const auto at = column.find('@');
            if (at == std::string::npos) throw DataError(path + ": bad metric column " + column);
            const auto k = static_cast<std::size_t>(std::stoull(column.substr(at + 1)));
            if (column.compare(0, at, "precision") == 0) report.k_values.push_back(k);
        }
        if (report.k_values.empty()) throw DataError(path + ": no metric columns");
    }
    const std::size_t nk = report.k_values.size();
    while (next_content_line(in, line)) {
        std::istringstream row_in(line);
        EvalRow row;
        double p, r, n;
        if (!(row_in >> row.user)) throw DataError(path + ": bad user column");
        for (std::size_t ki = 0; ki < nk; ++ki) {
            if (!(row_in >> p >> r >> n)) throw DataError(path + ": truncated metric row");
            row.precision.push_back(p);
            row.recall.push_back(r);
            row.ndcg.push_back(n);
        }
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) throw DataError(path + ": no rows");
    return report;
}

void save_stability_json(const std::vector<double>& aris, const std::vector<double>& fractions,
                         const std::string& path, const std::string& provenance) {
    nlohmann::json doc;
    if (!provenance.empty()) doc["_provenance"] = provenance;
    doc["fractions"] = fractions;
    doc["ari"] = aris;
    double min_ari = aris.empty() ? 0.0 : aris.front();
    for (const double v : aris) min_ari = std::min(min_ari, v);
    doc["min_ari"] = min_ari;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << doc.dump(2) << "\n";
}

}  // namespace uic
