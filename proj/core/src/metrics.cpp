#include "uic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "uic/errors.hpp"

namespace uic {
namespace {

std::size_t hits_in_prefix(const std::vector<std::uint32_t>& recommended,
                           const std::vector<std::uint32_t>& relevant, std::size_t k) {
    std::size_t hits = 0;
    std::size_t limit = std::min(k, recommended.size());
    for (std::size_t r = 0; r < limit; ++r)
        if (std::binary_search(relevant.begin(), relevant.end(), recommended[r])) ++hits;
    return hits;
}

}  // namespace

double precision_at_k(const std::vector<std::uint32_t>& recommended,
                      const std::vector<std::uint32_t>& relevant, std::size_t k) {
    if (k == 0) throw ConfigError("precision_at_k: k must be >= 1");
    std::size_t denom = std::min(k, recommended.size());
    if (denom == 0) return 0.0;
    return static_cast<double>(hits_in_prefix(recommended, relevant, k)) /
           static_cast<double>(denom);
}

double recall_at_k(const std::vector<std::uint32_t>& recommended,
                   const std::vector<std::uint32_t>& relevant, std::size_t k) {
    if (k == 0) throw ConfigError("recall_at_k: k must be >= 1");
    if (relevant.empty()) throw DataError("recall_at_k: empty relevant set is undefined");
    return static_cast<double>(hits_in_prefix(recommended, relevant, k)) /
           static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<std::uint32_t>& recommended,
                 const std::vector<std::uint32_t>& relevant, std::size_t k) {
    if (k == 0) throw ConfigError("ndcg_at_k: k must be >= 1");
    if (relevant.empty()) throw DataError("ndcg_at_k: empty relevant set is undefined");
    double dcg = 0.0;
    std::size_t limit = std::min(k, recommended.size());
    for (std::size_t r = 0; r < limit; ++r)
        if (std::binary_search(relevant.begin(), relevant.end(), recommended[r]))
            dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    double ideal = 0.0;
    std::size_t ideal_hits = std::min(k, relevant.size());
    for (std::size_t r = 0; r < ideal_hits; ++r)
        ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return dcg / ideal;
}

double ari(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    if (a.size() != b.size()) throw DataError("ari: assignments cover different elements");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;

    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    std::unordered_map<std::uint32_t, double> rows, cols;
    std::unordered_map<std::uint64_t, double> cells;
    for (std::size_t i = 0; i < n; ++i) {
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
        cells[(static_cast<std::uint64_t>(a[i]) << 32) | b[i]] += 1.0;
    }
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : cells) sum_cells += choose2(count);
    for (const auto& [key, count] : rows) sum_rows += choose2(count);
    for (const auto& [key, count] : cols) sum_cols += choose2(count);

    double total_pairs = choose2(static_cast<double>(n));
    double expected = sum_rows * sum_cols / total_pairs;
    double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return 1.0;  // both trivial partitions
    return (sum_cells - expected) / (maximum - expected);
}

}  // namespace uic
