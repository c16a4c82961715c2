#include "uic/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "uic/errors.hpp"
#include "uic/rng.hpp"

namespace uic {
namespace {

double squared_distance(const MatrixX<float>& points, Eigen::Index p,
                        const MatrixX<float>& centroids, Eigen::Index c) {
    return static_cast<double>((points.row(p) - centroids.row(c)).squaredNorm());
}

}  // namespace

KmeansModel kmeans(const MatrixX<float>& points, std::size_t k, std::uint64_t seed,
                   std::size_t max_iters, double tol) {
    const Eigen::Index n = points.rows();
    if (k == 0 || static_cast<Eigen::Index>(k) > n)
        throw ConfigError("kmeans: k must lie in [1, num_points]");
    auto rng = make_rng(seed);

    KmeansModel model;
    model.seed = seed;
    model.centroids.resize(static_cast<Eigen::Index>(k), points.cols());
    model.assignment.assign(static_cast<std::size_t>(n), 0);

    // k-means++ seeding: next centroid drawn proportionally to the squared
    // distance from the nearest chosen one.
    std::vector<double> dist2(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::max());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    model.centroids.row(0) = points.row(first(rng));
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            double d = squared_distance(points, p, model.centroids,
                                        static_cast<Eigen::Index>(c - 1));
            dist2[static_cast<std::size_t>(p)] =
                std::min(dist2[static_cast<std::size_t>(p)], d);
            total += dist2[static_cast<std::size_t>(p)];
        }
        Eigen::Index pick = n - 1;
        if (total > 0.0) {
            std::uniform_real_distribution<double> uniform(0.0, total);
            double target = uniform(rng);
            double cumulative = 0.0;
            for (Eigen::Index p = 0; p < n; ++p) {
                cumulative += dist2[static_cast<std::size_t>(p)];
                if (target < cumulative) {
                    pick = p;
                    break;
                }
            }
        } else {
            std::uniform_int_distribution<Eigen::Index> any(0, n - 1);
            pick = any(rng);
        }
        model.centroids.row(static_cast<Eigen::Index>(c)) = points.row(pick);
    }

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // Assignment step; ties go to the lower centroid id.
        for (Eigen::Index p = 0; p < n; ++p) {
            double best = std::numeric_limits<double>::max();
            std::uint32_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                double d = squared_distance(points, p, model.centroids,
                                            static_cast<Eigen::Index>(c));
                if (d < best) {
                    best = d;
                    best_c = static_cast<std::uint32_t>(c);
                }
            }
            model.assignment[static_cast<std::size_t>(p)] = best_c;
        }

        // Update step.
        MatrixX<float> sums = MatrixX<float>::Zero(static_cast<Eigen::Index>(k), points.cols());
        std::vector<std::size_t> counts(k, 0);
        for (Eigen::Index p = 0; p < n; ++p) {
            sums.row(model.assignment[static_cast<std::size_t>(p)]) += points.row(p);
            ++counts[model.assignment[static_cast<std::size_t>(p)]];
        }
        double max_move = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster at the point farthest from its
                // current centroid.
                Eigen::Index farthest = 0;
                double worst = -1.0;
                for (Eigen::Index p = 0; p < n; ++p) {
                    double d = squared_distance(
                        points, p, model.centroids,
                        static_cast<Eigen::Index>(model.assignment[static_cast<std::size_t>(p)]));
                    if (d > worst) {
                        worst = d;
                        farthest = p;
                    }
                }
                model.centroids.row(static_cast<Eigen::Index>(c)) = points.row(farthest);
                max_move = std::numeric_limits<double>::max();
                continue;
            }
            RowVectorX<float> mean = sums.row(static_cast<Eigen::Index>(c)) /
                                     static_cast<float>(counts[c]);
            double move = static_cast<double>(
                (mean - model.centroids.row(static_cast<Eigen::Index>(c))).norm());
            max_move = std::max(max_move, move);
            model.centroids.row(static_cast<Eigen::Index>(c)) = mean;
        }
        if (max_move < tol) break;
    }

    // Final assignment against the converged centroids.
    for (Eigen::Index p = 0; p < n; ++p) {
        double best = std::numeric_limits<double>::max();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double d = squared_distance(points, p, model.centroids,
                                        static_cast<Eigen::Index>(c));
            if (d < best) {
                best = d;
                best_c = static_cast<std::uint32_t>(c);
            }
        }
        model.assignment[static_cast<std::size_t>(p)] = best_c;
    }
    return model;
}

double kmeans_sse(const MatrixX<float>& points, const KmeansModel& model) {
    double sse = 0.0;
    for (Eigen::Index p = 0; p < points.rows(); ++p)
        sse += squared_distance(points, p, model.centroids,
                                static_cast<Eigen::Index>(model.assignment[static_cast<std::size_t>(p)]));
    return sse;
}

std::vector<std::vector<std::uint32_t>> kmeans_members(const KmeansModel& model) {
    std::vector<std::vector<std::uint32_t>> members(model.centroids.rows());
    for (std::size_t p = 0; p < model.assignment.size(); ++p)
        members[model.assignment[p]].push_back(static_cast<std::uint32_t>(p));
    return members;
}

RankedList kmeans_topk(const Scorer& scorer, std::uint32_t user, const KmeansModel& model,
                       const std::vector<std::vector<std::uint32_t>>& members,
                       std::size_t n_centroids, std::span<const std::uint32_t> exclude,
                       std::size_t k, std::size_t* scored) {
    const std::size_t total = static_cast<std::size_t>(model.centroids.rows());
    n_centroids = std::min(n_centroids, total);
    std::vector<std::pair<float, std::uint32_t>> ranked;
    ranked.reserve(total);
    for (std::size_t c = 0; c < total; ++c)
        ranked.emplace_back(
            scorer.users.row(user).dot(model.centroids.row(static_cast<Eigen::Index>(c))),
            static_cast<std::uint32_t>(c));
    std::partial_sort(ranked.begin(),
                      ranked.begin() + static_cast<std::ptrdiff_t>(n_centroids), ranked.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<std::uint32_t> candidates;
    for (std::size_t c = 0; c < n_centroids; ++c) {
        const auto& m = members[ranked[c].second];
        candidates.insert(candidates.end(), m.begin(), m.end());
    }
    return topk_among(scorer, user, candidates, exclude, k, scored);
}

}  // namespace uic
