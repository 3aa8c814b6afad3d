#pragma once

// Training: per-pair cast estimation and polynomial fit, clustering of the
// cast vectors, and one rectification matrix per cluster.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wbrf/clustering.hpp"
#include "wbrf/estimation.hpp"
#include "wbrf/fitting.hpp"
#include "wbrf/model.hpp"

namespace wbrf {

struct TrainConfig {
  std::size_t k = 50;
  std::uint64_t seed = 0;
  EstimatorConfig estimator{};
  PolyFitOptions fit{};
  ClusterOptions cluster{};
};

/// What a single training pair contributes once its images are discarded.
struct PairSummary {
  CastVector gamma;
  CastCorrectionVector ell;
  PolyMap map;
  double residual = 0.0;
};

struct TrainReport {
  RectificationModel model;
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> occupancy;
  /// Mean over pairs of the per-pixel RMS fit residual on the sample.
  double mean_fit_rms = 0.0;
  int cluster_iterations = 0;
};

/// Yields the next pair, or nullopt when exhausted.
using PairSource = std::function<std::optional<TrainingPair>()>;

inline PairSummary summarize_pair(const TrainingPair& pair, const TrainConfig& cfg) {
  const CastVector gamma = estimate(pair.input, cfg.estimator);
  const PolyFit fit = fit_polymap(pair, cfg.fit);
  const double rms = fit.residual / std::sqrt(3.0 * static_cast<double>(fit.samples));
  return {gamma, cast_correction_vector(gamma), fit.map, rms};
}

/// Clusters precomputed pair summaries and fits one rectification per cluster.
inline TrainReport train_from_summaries(std::span<const PairSummary> summaries,
                                        const TrainConfig& cfg) {
  if (cfg.k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (summaries.size() < cfg.k) {
    throw Error(ErrorCode::InsufficientData, std::to_string(summaries.size()) +
                                                 " training pairs for k = " + std::to_string(cfg.k));
  }
  std::vector<CastVector> gammas;
  gammas.reserve(summaries.size());
  double rms_sum = 0.0;
  for (const PairSummary& s : summaries) {
    gammas.push_back(s.gamma);
    rms_sum += s.residual;
  }
  const ClusterResult clusters = cluster_casts(gammas, cfg.k, cfg.seed, cfg.cluster);

  TrainReport report;
  report.assignments = clusters.assignments;
  report.cluster_iterations = clusters.iterations;
  report.occupancy.assign(cfg.k, 0);
  report.mean_fit_rms = rms_sum / static_cast<double>(summaries.size());
  report.model.estimator = cfg.estimator;
  report.model.estimator.strict = false;

  for (std::size_t c = 0; c < cfg.k; ++c) {
    std::vector<CastVector> members;
    std::vector<CastCorrectionVector> ells;
    std::vector<PolyMap> maps;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      if (clusters.assignments[i] != c) continue;
      members.push_back(summaries[i].gamma);
      ells.push_back(summaries[i].ell);
      maps.push_back(summaries[i].map);
    }
    report.occupancy[c] = members.size();
    report.model.centers.push_back(mean_direction(members));
    report.model.rects.push_back(fit_rectification(ells, maps));
  }
  report.model.validate();
  return report;
}

inline TrainReport train_with_report(const PairSource& next, const TrainConfig& cfg) {
  cfg.estimator.validate();
  std::vector<PairSummary> summaries;
  while (std::optional<TrainingPair> pair = next()) {
    summaries.push_back(summarize_pair(*pair, cfg));
  }
  return train_from_summaries(summaries, cfg);
}

inline TrainReport train_with_report(std::span<const TrainingPair> pairs, const TrainConfig& cfg) {
  cfg.estimator.validate();
  std::vector<PairSummary> summaries;
  summaries.reserve(pairs.size());
  for (const TrainingPair& pair : pairs) summaries.push_back(summarize_pair(pair, cfg));
  return train_from_summaries(summaries, cfg);
}

inline RectificationModel train(std::span<const TrainingPair> pairs, const TrainConfig& cfg) {
  return train_with_report(pairs, cfg).model;
}

inline RectificationModel train(const PairSource& next, const TrainConfig& cfg) {
  return train_with_report(next, cfg).model;
}

}  // namespace wbrf
