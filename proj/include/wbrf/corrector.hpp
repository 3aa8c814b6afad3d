#pragma once

// Test-time correction: resolve a cast vector (estimator or user pick), pick
// the nearest cluster, rectify the correction vector into a polynomial map,
// and apply it.

#include <optional>
#include <string>
#include <variant>

#include "wbrf/clustering.hpp"
#include "wbrf/estimation.hpp"
#include "wbrf/model.hpp"

namespace wbrf {

struct AutoSource {
  EstimatorConfig estimator;
};

struct ManualPixel {
  long long x = 0;
  long long y = 0;
};

struct ManualColor {
  Rgb rgb{};
};

using CastSource = std::variant<AutoSource, ManualPixel, ManualColor>;

struct CorrectionOptions {
  /// Read exactly the clicked pixel instead of its 3x3 neighborhood mean.
  bool single_pixel = false;
  bool strict = false;
};

struct CorrectionRequest {
  CastSource source;
  CorrectionOptions options{};
};

struct CorrectionResult {
  PixelMatrix corrected;
  std::size_t cluster_index = 0;
  CastVector gamma_used;
  CastCorrectionVector ell_used;
  PolyMap polymap_used;
  std::optional<std::string> warning;
};

inline std::size_t nearest_cluster(const CastVector& gamma, const RectificationModel& model) {
  return nearest_center(gamma, model.centers);
}

/// Mean color of the 3x3 neighborhood around (x, y), clipped at borders, or
/// the single pixel when requested.
inline Rgb sample_pick(const PixelMatrix& img, long long x, long long y, bool single_pixel) {
  const auto w = static_cast<long long>(img.width());
  const auto h = static_cast<long long>(img.height());
  if (x < 0 || y < 0 || x >= w || y >= h) {
    throw Error(ErrorCode::OutOfBoundsPixel, "(" + std::to_string(x) + ", " + std::to_string(y) +
                                                 ") outside " + std::to_string(w) + "x" +
                                                 std::to_string(h));
  }
  if (single_pixel) {
    return img.pixel(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  }
  Rgb sum{};
  int count = 0;
  for (long long yy = std::max(0LL, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
    for (long long xx = std::max(0LL, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
      const Rgb p = img.pixel(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
      for (int c = 0; c < 3; ++c) sum[c] += p[c];
      ++count;
    }
  }
  for (double& v : sum) v /= count;
  return sum;
}

/// Cast vector implied by a request, before any cluster lookup.
inline CastVector resolve_cast(const PixelMatrix& img, const CorrectionRequest& req) {
  const CastOptions cast_opts{.strict = req.options.strict};
  return std::visit(
      [&](const auto& src) -> CastVector {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, AutoSource>) {
          EstimatorConfig cfg = src.estimator;
          cfg.strict = cfg.strict || req.options.strict;
          return estimate(img, cfg);
        } else if constexpr (std::is_same_v<T, ManualPixel>) {
          return CastVector::from_rgb(sample_pick(img, src.x, src.y, req.options.single_pixel),
                                      cast_opts, ErrorCode::DegenerateColor);
        } else {
          for (double v : src.rgb) {
            if (!(v >= 0.0 && v <= 1.0)) {
              throw Error(ErrorCode::InvalidArgument, "manual color must lie in [0, 1]");
            }
          }
          return CastVector::from_rgb(src.rgb, cast_opts, ErrorCode::DegenerateColor);
        }
      },
      req.source);
}

/// Correction for an already-resolved cast vector.
inline CorrectionResult correct_with_cast(const PixelMatrix& img, const CastVector& gamma,
                                          const RectificationModel& model) {
  const CastCorrectionVector ell = cast_correction_vector(gamma);
  const std::size_t h = nearest_cluster(gamma, model);
  const PolyMap m = rectify(model.rects[h], ell);
  return {apply_polymap(img, m), h, gamma, ell, m, std::nullopt};
}

inline CorrectionResult correct(const PixelMatrix& img, const CorrectionRequest& req,
                                const RectificationModel& model) {
  CorrectionResult result = correct_with_cast(img, resolve_cast(img, req), model);
  if (!std::holds_alternative<AutoSource>(req.source) && model.estimator.pre_linearize) {
    result.warning =
        "model clusters were built from casts estimated on linearized images; manual picks "
        "come from the nonlinear image";
  }
  return result;
}

inline PixelMatrix correct_diagonal_baseline(const PixelMatrix& img, const CastVector& gamma) {
  return apply_diagonal(img, cast_correction_vector(gamma));
}

}  // namespace wbrf
