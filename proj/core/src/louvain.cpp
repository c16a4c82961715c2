#include "uic/louvain.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "uic/artifact.hpp"
#include "uic/errors.hpp"
#include "uic/rng.hpp"

namespace uic {
namespace {

constexpr std::uint64_t kLevelTag = 0x6c6f7576ull;  // "louv"
constexpr std::uint64_t kCapTag = 0x636170ull;      // "cap"
constexpr double kMinPassGain = 1e-7;
constexpr std::size_t kMaxPasses = 50;

// One sweep of local moving over `order`. Returns the modularity gain of the
// sweep; `tot` is the per-community strength sum and is kept up to date.
double local_move_pass(const ItemGraph& g, const std::vector<std::uint32_t>& order,
                       std::vector<std::uint32_t>& comm, std::vector<double>& tot,
                       double resolution, bool& any_move) {
    const double inv_w = 1.0 / g.total_weight;
    std::vector<double> k_to(g.num_nodes, 0.0);
    std::vector<std::uint32_t> touched;
    double pass_gain = 0.0;
    any_move = false;

    for (std::uint32_t v : order) {
        const std::uint32_t c_old = comm[v];
        const double k_v = g.strength[v];
        tot[c_old] -= k_v;

        touched.clear();
        auto neigh = g.neighbors_of(v);
        auto w = g.weights_of(v);
        for (std::size_t e = 0; e < neigh.size(); ++e) {
            if (neigh[e] == v) continue;  // self-loop mass moves with v
            std::uint32_t c = comm[neigh[e]];
            if (k_to[c] == 0.0) touched.push_back(c);
            k_to[c] += w[e];
        }
        if (k_to[c_old] == 0.0) touched.push_back(c_old);

        // gain(c) = k_{v->c} - gamma * k_v * tot[c] / 2m, identical up to a
        // positive constant to the modularity change of adopting c.
        auto gain_of = [&](std::uint32_t c) {
            return k_to[c] - resolution * k_v * tot[c] * inv_w;
        };
        const double g_old = gain_of(c_old);
        std::uint32_t best_c = c_old;
        double best_gain = g_old;
        for (std::uint32_t c : touched) {
            double gc = gain_of(c);
            if (gc > best_gain || (gc == best_gain && c < best_c)) {
                best_gain = gc;
                best_c = c;
            }
        }
        comm[v] = best_c;
        tot[best_c] += k_v;
        if (best_c != c_old) {
            any_move = true;
            pass_gain += 2.0 * inv_w * (best_gain - g_old);
        }
        for (std::uint32_t c : touched) k_to[c] = 0.0;
    }
    return pass_gain;
}

// Relabels community ids densely, ordered by smallest member node.
std::uint32_t densify(std::vector<std::uint32_t>& comm) {
    constexpr std::uint32_t kNone = 0xffffffffu;
    std::vector<std::uint32_t> remap(comm.size(), kNone);
    std::uint32_t next = 0;
    for (auto& c : comm) {
        if (remap[c] == kNone) remap[c] = next++;
        c = remap[c];
    }
    return next;
}

ItemGraph aggregate(const ItemGraph& g, const std::vector<std::uint32_t>& comm,
                    std::uint32_t num_comms) {
    // Ordered-pair sums transfer directly: summing stored entries per
    // community pair reproduces the self-loop-holds-full-mass convention.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(num_comms);
    for (std::uint32_t v = 0; v < g.num_nodes; ++v) {
        auto neigh = g.neighbors_of(v);
        auto w = g.weights_of(v);
        for (std::size_t e = 0; e < neigh.size(); ++e)
            rows[comm[v]].emplace_back(comm[neigh[e]], w[e]);
    }
    ItemGraph out;
    out.num_nodes = num_comms;
    out.offsets.assign(num_comms + 1, 0);
    for (std::uint32_t c = 0; c < num_comms; ++c) {
        auto& row = rows[c];
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t keep = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (keep > 0 && row[keep - 1].first == row[j].first)
                row[keep - 1].second += row[j].second;
            else
                row[keep++] = row[j];
        }
        row.resize(keep);
        out.offsets[c + 1] = out.offsets[c] + keep;
    }
    out.neighbors.reserve(out.offsets.back());
    out.weights.reserve(out.offsets.back());
    out.strength.assign(num_comms, 0.0);
    for (std::uint32_t c = 0; c < num_comms; ++c) {
        for (const auto& [n, wt] : rows[c]) {
            out.neighbors.push_back(n);
            out.weights.push_back(wt);
            out.strength[c] += wt;
        }
        out.total_weight += out.strength[c];
    }
    return out;
}

// Full Louvain on one graph; assignment comes back dense.
std::vector<std::uint32_t> louvain_partition(const ItemGraph& graph, double resolution,
                                             std::uint64_t seed,
                                             std::vector<double>* trace) {
    std::vector<std::uint32_t> mapping(graph.num_nodes);
    std::iota(mapping.begin(), mapping.end(), 0);
    if (graph.total_weight <= 0.0) {
        return mapping;  // edgeless: everything stays a singleton
    }

    ItemGraph owned;
    const ItemGraph* level_graph = &graph;
    for (std::uint64_t level = 0;; ++level) {
        const ItemGraph& g = *level_graph;
        std::vector<std::uint32_t> comm(g.num_nodes);
        std::iota(comm.begin(), comm.end(), 0);
        std::vector<double> tot(g.strength);

        auto rng = make_rng(derive_seed(seed, kLevelTag, level));
        std::vector<std::uint32_t> order(g.num_nodes);
        std::iota(order.begin(), order.end(), 0);
        bool moved_any = false;
        for (std::size_t pass = 0; pass < kMaxPasses; ++pass) {
            std::shuffle(order.begin(), order.end(), rng);
            bool any_move = false;
            double gain = local_move_pass(g, order, comm, tot, resolution, any_move);
            moved_any = moved_any || any_move;
            if (trace) {
                // Q of the coarse partition equals Q of the induced fine one.
                std::vector<std::uint32_t> induced(mapping.size());
                for (std::size_t v = 0; v < mapping.size(); ++v) induced[v] = comm[mapping[v]];
                trace->push_back(modularity(graph, induced, resolution));
            }
            if (!any_move || gain < kMinPassGain) break;
        }
        if (!moved_any) break;

        std::uint32_t num_comms = densify(comm);
        for (auto& m : mapping) m = comm[m];
        if (num_comms == g.num_nodes) break;
        owned = aggregate(g, comm, num_comms);
        level_graph = &owned;
        if (num_comms <= 1) break;
    }
    densify(mapping);
    return mapping;
}

ItemGraph induced_subgraph(const ItemGraph& g, const std::vector<std::uint32_t>& nodes,
                           std::vector<std::uint32_t>& local_of) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges;
    for (std::uint32_t local = 0; local < nodes.size(); ++local) {
        std::uint32_t v = nodes[local];
        auto neigh = g.neighbors_of(v);
        auto w = g.weights_of(v);
        for (std::size_t e = 0; e < neigh.size(); ++e) {
            std::uint32_t u = neigh[e];
            if (local_of[u] == 0xffffffffu) continue;
            if (u == v)
                edges.emplace_back(local, local, w[e] / 2.0);
            else if (v < u)
                edges.emplace_back(local, local_of[u], w[e]);
        }
    }
    return build_item_graph(static_cast<std::uint32_t>(nodes.size()), edges);
}

// Splits every cluster larger than `cap` by re-running Louvain on its induced
// subgraph with progressively doubled resolution; a cluster that will not
// split is chopped into contiguous blocks by item index.
void enforce_size_cap(const ItemGraph& graph, std::vector<std::uint32_t>& assignment,
                      double resolution, std::uint64_t seed, std::size_t cap) {
    constexpr std::uint32_t kNone = 0xffffffffu;
    constexpr int kMaxDepth = 16;
    std::uint32_t num_clusters = densify(assignment);
    std::vector<std::uint32_t> local_of(graph.num_nodes, kNone);

    struct Job {
        std::uint32_t cluster;
        int depth;
    };
    std::vector<Job> queue;
    for (std::uint32_t c = 0; c < num_clusters; ++c) queue.push_back({c, 1});

    while (!queue.empty()) {
        Job job = queue.back();
        queue.pop_back();
        std::vector<std::uint32_t> members;
        for (std::uint32_t v = 0; v < graph.num_nodes; ++v)
            if (assignment[v] == job.cluster) members.push_back(v);
        if (members.size() <= cap) continue;

        std::vector<std::uint32_t> sub;
        if (job.depth <= kMaxDepth) {
            for (std::uint32_t local = 0; local < members.size(); ++local)
                local_of[members[local]] = local;
            ItemGraph sub_graph = induced_subgraph(graph, members, local_of);
            for (std::uint32_t v : members) local_of[v] = kNone;
            double sub_resolution = resolution * static_cast<double>(1u << job.depth);
            sub = louvain_partition(sub_graph, sub_resolution,
                                    derive_seed(seed, kCapTag, members[0]) + job.depth,
                                    nullptr);
        }
        std::uint32_t parts =
            sub.empty() ? 1 : *std::max_element(sub.begin(), sub.end()) + 1;
        if (parts <= 1) {
            // Refuses to split: contiguous blocks of at most `cap` members.
            for (std::uint32_t local = 0; local < members.size(); ++local) {
                std::uint32_t block = local / static_cast<std::uint32_t>(cap);
                assignment[members[local]] =
                    block == 0 ? job.cluster : num_clusters + block - 1;
            }
            std::uint32_t blocks =
                static_cast<std::uint32_t>((members.size() + cap - 1) / cap);
            num_clusters += blocks - 1;
            continue;
        }
        for (std::uint32_t local = 0; local < members.size(); ++local)
            assignment[members[local]] =
                sub[local] == 0 ? job.cluster : num_clusters + sub[local] - 1;
        queue.push_back({job.cluster, job.depth + 1});
        for (std::uint32_t p = 1; p < parts; ++p)
            queue.push_back({num_clusters + p - 1, job.depth + 1});
        num_clusters += parts - 1;
    }
}

}  // namespace

std::vector<std::vector<std::uint32_t>> cluster_members(const Clustering& clustering) {
    std::vector<std::vector<std::uint32_t>> members(clustering.num_clusters);
    for (std::uint32_t item = 0; item < clustering.num_items; ++item)
        members[clustering.assignment[item]].push_back(item);
    return members;
}

double modularity(const ItemGraph& graph, const std::vector<std::uint32_t>& assignment,
                  double resolution) {
    if (assignment.size() != graph.num_nodes)
        throw DataError("assignment length does not match graph");
    if (graph.total_weight <= 0.0) return 0.0;
    std::uint32_t num_comms = 0;
    for (std::uint32_t c : assignment) num_comms = std::max(num_comms, c + 1);
    std::vector<double> in(num_comms, 0.0), tot(num_comms, 0.0);
    for (std::uint32_t v = 0; v < graph.num_nodes; ++v) {
        tot[assignment[v]] += graph.strength[v];
        auto neigh = graph.neighbors_of(v);
        auto w = graph.weights_of(v);
        for (std::size_t e = 0; e < neigh.size(); ++e)
            if (assignment[neigh[e]] == assignment[v]) in[assignment[v]] += w[e];
    }
    const double inv_w = 1.0 / graph.total_weight;
    double q = 0.0;
    for (std::uint32_t c = 0; c < num_comms; ++c)
        q += in[c] * inv_w - resolution * (tot[c] * inv_w) * (tot[c] * inv_w);
    return q;
}

LouvainResult louvain(const ItemGraph& graph, double resolution, std::uint64_t seed,
                      std::size_t max_cluster_size) {
    if (resolution <= 0.0) throw ConfigError("louvain resolution must be positive");
    LouvainResult result;
    std::vector<std::uint32_t> assignment =
        louvain_partition(graph, resolution, seed, &result.pass_modularity);
    if (max_cluster_size > 0)
        enforce_size_cap(graph, assignment, resolution, seed, max_cluster_size);

    // Final dense relabel ordered by smallest member item.
    std::uint32_t k = densify(assignment);
    result.clustering.num_items = graph.num_nodes;
    result.clustering.num_clusters = k;
    result.clustering.assignment = std::move(assignment);
    result.clustering.resolution = resolution;
    result.clustering.seed = seed;
    return result;
}

void save_clustering(const Clustering& clustering, const std::string& path,
                     const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    std::ostringstream res;
    res << clustering.resolution;
    out << "# K=" << clustering.num_clusters << " resolution=" << res.str()
        << " seed=" << clustering.seed << "\n";
    for (std::uint32_t item = 0; item < clustering.num_items; ++item)
        out << item << "\t" << clustering.assignment[item] << "\n";
}

Clustering load_clustering(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open clustering: " + path);
    std::string line;
    if (!next_content_line(in, line, "# K="))
        throw DataError(path + ": missing '# K=' header");
    Clustering clustering;
    unsigned long k = 0, seed = 0;
    double resolution = 0.0;
    if (std::sscanf(line.c_str(), "# K=%lu resolution=%lf seed=%lu", &k, &resolution, &seed) != 3)
        throw DataError(path + ": malformed '# K=' header");
    clustering.num_clusters = static_cast<std::uint32_t>(k);
    clustering.resolution = resolution;
    clustering.seed = seed;
    while (next_content_line(in, line)) {
        unsigned long item = 0, cluster = 0;
        if (std::sscanf(line.c_str(), "%lu\t%lu", &item, &cluster) != 2)
            throw DataError(path + ": bad assignment row '" + line + "'");
        if (item != clustering.assignment.size())
            throw DataError(path + ": item rows must be dense and ascending");
        if (cluster >= k) throw DataError(path + ": cluster id out of range");
        clustering.assignment.push_back(static_cast<std::uint32_t>(cluster));
    }
    clustering.num_items = static_cast<std::uint32_t>(clustering.assignment.size());
    if (clustering.num_items == 0) throw DataError(path + ": no assignments");
    return clustering;
}

}  // namespace uic
