#include "uic/interest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "uic/artifact.hpp"
#include "uic/errors.hpp"

namespace uic {
namespace {

// One application of pi' = (1 - damping) e_seed + damping P^T pi on the
// bipartite walk; users occupy [0, U), items [U, U + I).
void walk_step(const BipartiteGraph& bg, std::uint32_t seed_user, double damping,
               const std::vector<double>& pi, std::vector<double>& next) {
    const std::uint32_t U = bg.num_users;
    std::fill(next.begin(), next.end(), 0.0);
    next[seed_user] = 1.0 - damping;
    for (std::uint32_t u = 0; u < U; ++u) {
        if (pi[u] == 0.0) continue;
        auto items = bg.items_of(u);
        double share = damping * pi[u] / static_cast<double>(items.size());
        for (std::uint32_t i : items) next[U + i] += share;
    }
    for (std::uint32_t i = 0; i < bg.num_items; ++i) {
        double mass = pi[U + i];
        if (mass == 0.0) continue;
        auto users = bg.users_of(i);
        double share = damping * mass / static_cast<double>(users.size());
        for (std::uint32_t u : users) next[u] += share;
    }
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

}  // namespace

PprScores ppr(const BipartiteGraph& bg, std::uint32_t user, double damping,
              double tolerance, std::size_t max_iters) {
    if (user >= bg.num_users) throw DataError("ppr: user index out of range");
    if (!(damping > 0.0 && damping < 1.0)) throw ConfigError("ppr damping must lie in (0,1)");
    if (tolerance <= 0.0) throw ConfigError("ppr tolerance must be positive");
    if (bg.user_degree(user) == 0)
        throw DataError("ppr: user " + std::to_string(user) + " has no engagement, PPR undefined");

    const std::size_t n = static_cast<std::size_t>(bg.num_users) + bg.num_items;
    std::vector<double> pi(n, 0.0), next(n, 0.0);
    pi[user] = 1.0;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        walk_step(bg, user, damping, pi, next);
        double change = l1_distance(pi, next);
        pi.swap(next);
        if (change < tolerance) break;
    }
    walk_step(bg, user, damping, pi, next);
    double residual = l1_distance(pi, next);

    PprScores out;
    out.user = user;
    out.damping = damping;
    out.residual_bound = residual;
    double item_mass = 0.0;
    for (std::uint32_t i = 0; i < bg.num_items; ++i) item_mass += pi[bg.num_users + i];
    if (item_mass <= 0.0)
        throw NumericError("ppr: no item mass for user " + std::to_string(user));
    for (std::uint32_t i = 0; i < bg.num_items; ++i) {
        double mass = pi[bg.num_users + i];
        if (mass > 0.0) out.scores.emplace_back(i, mass / item_mass);
    }
    return out;
}

InterestProfile interest_from_ppr(const PprScores& scores, const Clustering& clustering) {
    std::vector<double> mass(clustering.num_clusters, 0.0);
    double total = 0.0;
    for (const auto& [item, score] : scores.scores) {
        if (item >= clustering.num_items)
            throw DataError("interest: PPR item outside clustering");
        mass[clustering.assignment[item]] += score;
        total += score;
    }
    if (total <= 0.0) throw DataError("interest: all-zero PPR scores");
    InterestProfile profile;
    profile.user = scores.user;
    profile.num_clusters = clustering.num_clusters;
    for (std::uint32_t c = 0; c < clustering.num_clusters; ++c)
        if (mass[c] > 0.0) profile.weights.emplace_back(c, mass[c] / total);
    return profile;
}

InterestProfile interest_from_counts(const BipartiteGraph& bg, std::uint32_t user,
                                     const Clustering& clustering) {
    if (user >= bg.num_users) throw DataError("interest: user index out of range");
    auto items = bg.items_of(user);
    if (items.empty())
        throw DataError("interest: user " + std::to_string(user) + " has no engagement");
    std::vector<std::uint32_t> counts(clustering.num_clusters, 0);
    for (std::uint32_t i : items) {
        if (i >= clustering.num_items) throw DataError("interest: item outside clustering");
        ++counts[clustering.assignment[i]];
    }
    InterestProfile profile;
    profile.user = user;
    profile.num_clusters = clustering.num_clusters;
    double total = static_cast<double>(items.size());
    for (std::uint32_t c = 0; c < clustering.num_clusters; ++c)
        if (counts[c] > 0) profile.weights.emplace_back(c, counts[c] / total);
    return profile;
}

std::vector<InterestProfile> build_all_profiles(const BipartiteGraph& bg,
                                                const Clustering& clustering,
                                                const std::string& method, double damping,
                                                double tolerance, std::size_t max_iters,
                                                unsigned threads) {
    if (method != "ppr" && method != "counts")
        throw ConfigError("interest method must be 'ppr' or 'counts'");
    std::vector<InterestProfile> profiles(bg.num_users);
    auto compute_range = [&](std::uint32_t begin, std::uint32_t end) {
        for (std::uint32_t u = begin; u < end; ++u) {
            if (method == "ppr")
                profiles[u] = interest_from_ppr(ppr(bg, u, damping, tolerance, max_iters),
                                                clustering);
            else
                profiles[u] = interest_from_counts(bg, u, clustering);
        }
    };
    unsigned workers = std::max(1u, threads);
    if (workers == 1 || bg.num_users < 2 * workers) {
        compute_range(0, bg.num_users);
        return profiles;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    std::uint32_t chunk = (bg.num_users + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::uint32_t begin = w * chunk;
        std::uint32_t end = std::min<std::uint32_t>(begin + chunk, bg.num_users);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                compute_range(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return profiles;
}

void save_profiles(const std::vector<InterestProfile>& profiles, const std::string& path,
                   const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    char buf[64];
    for (const auto& profile : profiles) {
        out << profile.user << "\t";
        for (std::size_t j = 0; j < profile.weights.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%u:%.6f", profile.weights[j].first,
                          profile.weights[j].second);
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
}

std::vector<InterestProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profiles: " + path);
    std::vector<InterestProfile> profiles;
    std::string line;
    std::uint32_t max_cluster = 0;
    while (next_content_line(in, line)) {
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw DataError(path + ": expected user<TAB>weights");
        InterestProfile profile;
        profile.user = static_cast<std::uint32_t>(std::stoul(line.substr(0, tab)));
        if (profile.user != profiles.size())
            throw DataError(path + ": user rows must be dense and ascending");
        std::size_t pos = tab + 1;
        while (pos < line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            std::size_t colon = line.find(':', pos);
            if (colon == std::string::npos || colon >= comma)
                throw DataError(path + ": expected cluster:weight entries");
            std::uint32_t cluster =
                static_cast<std::uint32_t>(std::stoul(line.substr(pos, colon - pos)));
            double weight = std::stod(line.substr(colon + 1, comma - colon - 1));
            profile.weights.emplace_back(cluster, weight);
            max_cluster = std::max(max_cluster, cluster);
            pos = comma + 1;
        }
        if (profile.weights.empty()) throw DataError(path + ": empty profile row");
        profiles.push_back(std::move(profile));
    }
    for (auto& profile : profiles) profile.num_clusters = max_cluster + 1;
    return profiles;
}

}  // namespace uic
