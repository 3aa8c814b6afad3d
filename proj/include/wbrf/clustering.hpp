#pragma once

// Spherical k-means with k-means++ seeding over unit cast vectors, using the
// cosine distance d(a, b) = 1 - a.b.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wbrf/color.hpp"
#include "wbrf/random.hpp"

namespace wbrf {

struct ClusterOptions {
  int max_iterations = 300;
};

struct ClusterResult {
  std::vector<std::size_t> assignments;
  std::vector<CastVector> centers;
  /// Total cost sum(1 - x.center) after seeding and after every iteration.
  std::vector<double> cost_history;
  int iterations = 0;
};

inline double cosine_distance(const CastVector& a, const CastVector& b) {
  return std::max(0.0, 1.0 - a.dot(b));
}

/// Highest cosine similarity wins; ties go to the lowest index.
inline std::size_t nearest_center(const CastVector& x, std::span<const CastVector> centers) {
  std::size_t best = 0;
  double best_sim = x.dot(centers[0]);
  for (std::size_t j = 1; j < centers.size(); ++j) {
    const double sim = x.dot(centers[j]);
    if (sim > best_sim) {
      best_sim = sim;
      best = j;
    }
  }
  return best;
}

namespace detail {

inline std::vector<CastVector> kmeanspp_seed(std::span<const CastVector> points, std::size_t k,
                                             std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<CastVector> centers;
  std::vector<bool> chosen(n, false);
  std::size_t first = uniform_index(rng, n);
  centers.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = cosine_distance(points[i], centers[0]);

  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += dist[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] <= 0.0) continue;
        acc += dist[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Remaining points coincide with existing centers; take any unchosen one.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[uniform_index(rng, free.size())];
    }
    chosen[pick] = true;
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], cosine_distance(points[i], centers.back()));
    }
  }
  return centers;
}

inline double clustering_cost(std::span<const CastVector> points,
                              std::span<const std::size_t> assignments,
                              std::span<const CastVector> centers) {
  double cost = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cost += cosine_distance(points[i], centers[assignments[i]]);
  }
  return cost;
}

inline CastVector normalized_sum(const Rgb& sum) {
  return CastVector::from_rgb(sum, {.strict = false, .epsilon = 0.0});
}

}  // namespace detail

/// Normalized mean of unit vectors (the spherical centroid).
inline CastVector mean_direction(std::span<const CastVector> members) {
  Rgb sum{};
  for (const CastVector& v : members) {
    for (int c = 0; c < 3; ++c) sum[c] += v[c];
  }
  return detail::normalized_sum(sum);
}

inline ClusterResult cluster_casts(std::span<const CastVector> points, std::size_t k,
                                   std::uint64_t seed, const ClusterOptions& opts = {}) {
  const std::size_t n = points.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (n < k) {
    throw Error(ErrorCode::InsufficientData,
                std::to_string(n) + " cast vectors for k = " + std::to_string(k));
  }

  std::mt19937_64 rng(seed);
  ClusterResult result;
  result.centers = detail::kmeanspp_seed(points, k, rng);
  result.assignments.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.assignments[i] = nearest_center(points[i], result.centers);
  result.cost_history.push_back(detail::clustering_cost(points, result.assignments, result.centers));

  const auto update_centers = [&] {
    std::vector<Rgb> sums(k, Rgb{});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.assignments[i];
      ++counts[c];
      for (int ch = 0; ch < 3; ++ch) sums[c][ch] += points[i][ch];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) result.centers[c] = detail::normalized_sum(sums[c]);
    }
    // Empty clusters take the point farthest from its own center, drawn from
    // a cluster that keeps at least one member.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = result.assignments[i];
        if (counts[own] < 2) continue;
        const double d = cosine_distance(points[i], result.centers[own]);
        if (d > far_dist) {
          far_dist = d;
          far = i;
        }
      }
      const std::size_t donor = result.assignments[far];
      for (int ch = 0; ch < 3; ++ch) sums[donor][ch] -= points[far][ch];
      --counts[donor];
      result.centers[donor] = detail::normalized_sum(sums[donor]);
      result.assignments[far] = c;
      sums[c] = points[far].values();
      counts[c] = 1;
      result.centers[c] = points[far];
    }
  };

  bool converged = false;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    update_centers();
    std::vector<std::size_t> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest_center(points[i], result.centers);
    result.iterations = iter + 1;
    const bool unchanged = next == result.assignments;
    result.assignments = std::move(next);
    result.cost_history.push_back(
        detail::clustering_cost(points, result.assignments, result.centers));
    if (unchanged) {
      converged = true;
      break;
    }
  }
  // Iteration cap reached: make the centers agree with the final partition.
  if (!converged) update_centers();
  return result;
}

}  // namespace wbrf
