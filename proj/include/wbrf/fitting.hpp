#pragma once

// Least-squares fits: the per-pair polynomial mapping and the per-cluster
// rectification matrix that maps a correction vector to a mapping.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wbrf/color.hpp"

namespace wbrf {

/// 33x3 matrix H with vec(M) = H * ell.
using RectMatrix = Eigen::Matrix<double, kPolyMapSize, 3>;

struct TrainingPair {
  PixelMatrix input;   ///< wrong-WB render
  PixelMatrix target;  ///< ground-truth render

  TrainingPair(PixelMatrix in, PixelMatrix gt) : input(std::move(in)), target(std::move(gt)) {
    if (input.empty() || !input.same_shape(target)) {
      throw Error(ErrorCode::DimensionMismatch, "training pair images differ in size");
    }
  }
};

struct PolyFitOptions {
  std::size_t max_samples = 50'000;
  /// Ridge weight relative to the trace of the 11x11 Gram matrix; 0 disables.
  double ridge = 1e-8;
  /// The ridge is added only when min/max Gram eigenvalue falls below this.
  double ridge_rcond = 1e-10;
};

struct PolyFit {
  PolyMap map;
  /// ||r(M) phi(I) - G||_F over the sampled pixels (no ridge term).
  double residual = 0.0;
  std::size_t samples = 0;
};

/// Indices floor(k * n / count) for k in [0, count); all indices when n <= count.
inline std::vector<std::size_t> stride_sample(std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx;
  if (n <= count) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  idx.resize(count);
  for (std::size_t k = 0; k < count; ++k) idx[k] = k * n / count;
  return idx;
}

namespace detail {

struct NormalEquations {
  Eigen::Matrix<double, kKernelTerms, kKernelTerms> gram =
      Eigen::Matrix<double, kKernelTerms, kKernelTerms>::Zero();
  Eigen::Matrix<double, kKernelTerms, 3> rhs = Eigen::Matrix<double, kKernelTerms, 3>::Zero();
};

inline NormalEquations accumulate_normal_equations(const TrainingPair& pair,
                                                   std::span<const std::size_t> samples) {
  NormalEquations ne;
  const auto in = pair.input.data();
  const auto gt = pair.target.data();
  for (std::size_t i : samples) {
    const KernelTerms t = kernel_terms(in[3 * i], in[3 * i + 1], in[3 * i + 2]);
    for (int a = 0; a < kKernelTerms; ++a) {
      for (int b = a; b < kKernelTerms; ++b) ne.gram(a, b) += t[a] * t[b];
      for (int c = 0; c < 3; ++c) ne.rhs(a, c) += t[a] * gt[3 * i + c];
    }
  }
  ne.gram.triangularView<Eigen::StrictlyLower>() = ne.gram.transpose();
  return ne;
}

}  // namespace detail

/// Residual ||r(M) phi(I) - G||_F restricted to `samples`.
inline double polymap_residual(const TrainingPair& pair, const PolyMap& m,
                               std::span<const std::size_t> samples) {
  const PolyMatrix a = m.matrix();
  const auto in = pair.input.data();
  const auto gt = pair.target.data();
  double sq = 0.0;
  for (std::size_t i : samples) {
    const KernelTerms t = kernel_terms(in[3 * i], in[3 * i + 1], in[3 * i + 2]);
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int j = 0; j < kKernelTerms; ++j) v += a(c, j) * t[j];
      const double d = v - gt[3 * i + c];
      sq += d * d;
    }
  }
  return std::sqrt(sq);
}

/// Closed-form least-squares fit of the 3x11 mapping from the input's kernel
/// expansion to the target over a stride subsample. Ill-conditioned normal
/// equations get a ridge of `ridge * trace(Gram)`.
inline PolyFit fit_polymap(const TrainingPair& pair, const PolyFitOptions& opts = {}) {
  if (opts.max_samples < static_cast<std::size_t>(kPolyMapSize)) {
    throw Error(ErrorCode::InvalidArgument, "max_samples must be at least 33");
  }
  if (!(opts.ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");

  const std::vector<std::size_t> samples = stride_sample(pair.input.pixel_count(), opts.max_samples);
  detail::NormalEquations ne = detail::accumulate_normal_equations(pair, samples);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kKernelTerms, kKernelTerms>> eig(
      ne.gram, Eigen::EigenvaluesOnly);
  const double ev_min = eig.eigenvalues().minCoeff();
  const double ev_max = eig.eigenvalues().maxCoeff();
  const bool well_conditioned = ev_max > 0.0 && ev_min > ev_max * opts.ridge_rcond;
  const double lambda = well_conditioned ? 0.0 : opts.ridge * ne.gram.trace();
  Eigen::Matrix<double, kKernelTerms, 3> solution;
  if (lambda > 0.0) {
    ne.gram.diagonal().array() += lambda;
    solution = ne.gram.llt().solve(ne.rhs);
  } else {
    if (!(ev_max > 0.0) || ev_min <= ev_max * 1e-15) {
      throw Error(ErrorCode::RankDeficient, "kernel Gram matrix is singular; enable ridge");
    }
    solution = ne.gram.ldlt().solve(ne.rhs);
  }

  PolyFit fit{PolyMap::from_matrix(solution.transpose()), 0.0, samples.size()};
  fit.residual = polymap_residual(pair, fit.map, samples);
  return fit;
}

/// Minimum-norm least-squares H for H * L ~= [M_1 ... M_n]. Always defined.
inline RectMatrix fit_rectification(std::span<const CastCorrectionVector> ells,
                                    std::span<const PolyMap> maps) {
  if (ells.empty() || ells.size() != maps.size()) {
    throw Error(ErrorCode::DimensionMismatch, "need equal-length, nonempty ell and map lists");
  }
  const auto n = static_cast<Eigen::Index>(ells.size());
  Eigen::MatrixXd lt(n, 3);
  Eigen::MatrixXd mt(n, kPolyMapSize);
  for (Eigen::Index i = 0; i < n; ++i) {
    lt.row(i) = ells[i].vector().transpose();
    mt.row(i) = maps[i].vector().transpose();
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(lt);
  const Eigen::MatrixXd ht = cod.solve(mt);  // 3 x 33
  return ht.transpose();
}

/// vec(M) = H * ell.
inline PolyMap rectify(const RectMatrix& h, const CastCorrectionVector& ell) {
  return PolyMap(h * ell.vector());
}

}  // namespace wbrf
