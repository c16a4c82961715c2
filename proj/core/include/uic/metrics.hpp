#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace uic {

// Ranking metrics over one user's recommendation list. `relevant` must be
// sorted ascending; `recommended` is in rank order. Recall and NDCG require a
// non-empty relevant set (callers skip such users).

// |top-K intersect relevant| / K; a list shorter than K divides by its actual
// length instead.
double precision_at_k(const std::vector<std::uint32_t>& recommended,
                      const std::vector<std::uint32_t>& relevant, std::size_t k);

// |top-K intersect relevant| / |relevant|.
double recall_at_k(const std::vector<std::uint32_t>& recommended,
                   const std::vector<std::uint32_t>& relevant, std::size_t k);

// Binary-gain DCG@K with 1/log2(rank+1) discounting, normalized by the ideal
// DCG over min(K, |relevant|) hits.
double ndcg_at_k(const std::vector<std::uint32_t>& recommended,
                 const std::vector<std::uint32_t>& relevant, std::size_t k);

// Adjusted Rand Index between two cluster assignments of the same elements
// (a[i] and b[i] label element i). The degenerate 0/0 case (e.g. both
// single-cluster) scores 1.
double ari(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

}  // namespace uic
