#pragma once

// Illuminant (color-cast) estimators and the sRGB transfer curve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbrf/color.hpp"

namespace wbrf {

enum class EstimatorKind : std::uint8_t { GrayWorld = 0, ShadesOfGray = 1 };

inline std::string_view to_string(EstimatorKind kind) {
  return kind == EstimatorKind::GrayWorld ? "gw" : "sog";
}

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::GrayWorld;
  double minkowski_p = 6.0;
  bool pre_linearize = false;
  /// Exclude pixels with any channel >= kSaturationLevel from the statistics.
  bool mask_saturated = false;
  bool strict = false;

  static constexpr double kSaturationLevel = 0.98;

  void validate() const {
    if (!(minkowski_p >= 1.0) || !std::isfinite(minkowski_p)) {
      throw Error(ErrorCode::InvalidArgument, "minkowski_p must be >= 1");
    }
  }

  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

namespace detail {

// Pairwise summation over a strided channel; the split points depend only on
// the range length, so results are reproducible.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 64) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Per-channel values of the pixels that take part in estimation.
inline std::array<std::vector<double>, 3> estimation_channels(const PixelMatrix& img,
                                                               bool mask_saturated) {
  std::array<std::vector<double>, 3> ch;
  for (auto& c : ch) c.reserve(img.pixel_count());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const Rgb p = img.pixel(i);
    if (mask_saturated && std::max({p[0], p[1], p[2]}) >= EstimatorConfig::kSaturationLevel) {
      continue;
    }
    for (int c = 0; c < 3; ++c) ch[c].push_back(p[c]);
  }
  if (ch[0].empty()) {
    // Every pixel is saturated: fall back to the unmasked statistics.
    return estimation_channels(img, false);
  }
  return ch;
}

}  // namespace detail

inline CastVector gray_world(const PixelMatrix& img, const EstimatorConfig& cfg = {}) {
  const auto ch = detail::estimation_channels(img, cfg.mask_saturated);
  Rgb mean{};
  for (int c = 0; c < 3; ++c) {
    mean[c] = detail::pairwise_sum(ch[c]) / static_cast<double>(ch[c].size());
  }
  return CastVector::from_rgb(mean, {.strict = cfg.strict}, ErrorCode::DegenerateImage);
}

/// Minkowski p-mean per channel. Values are divided by the channel maximum
/// before raising to p so large p neither underflows nor loses precision.
inline CastVector shades_of_gray(const PixelMatrix& img, double p,
                                 const EstimatorConfig& cfg = {}) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::InvalidArgument, "shades-of-gray exponent must be >= 1");
  }
  const auto ch = detail::estimation_channels(img, cfg.mask_saturated);
  Rgb pmean{};
  for (int c = 0; c < 3; ++c) {
    const double peak = *std::max_element(ch[c].begin(), ch[c].end());
    if (peak <= 0.0) {
      pmean[c] = 0.0;
      continue;
    }
    std::vector<double> powered(ch[c].size());
    std::transform(ch[c].begin(), ch[c].end(), powered.begin(),
                   [&](double v) { return std::pow(v / peak, p); });
    const double mean = detail::pairwise_sum(powered) / static_cast<double>(powered.size());
    pmean[c] = peak * std::pow(mean, 1.0 / p);
  }
  return CastVector::from_rgb(pmean, {.strict = cfg.strict}, ErrorCode::DegenerateImage);
}

inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

inline PixelMatrix srgb_linearize(const PixelMatrix& img) {
  std::vector<double> out(img.data().begin(), img.data().end());
  for (double& v : out) v = std::clamp(srgb_to_linear(v), 0.0, 1.0);
  return PixelMatrix(img.width(), img.height(), std::move(out));
}

inline PixelMatrix srgb_delinearize(const PixelMatrix& img) {
  std::vector<double> out(img.data().begin(), img.data().end());
  for (double& v : out) v = std::clamp(linear_to_srgb(v), 0.0, 1.0);
  return PixelMatrix(img.width(), img.height(), std::move(out));
}

/// Runs the configured estimator. With pre_linearize the statistics come
/// from the linearized image; the caller still applies the returned cast to
/// the original (nonlinear) image.
inline CastVector estimate(const PixelMatrix& img, const EstimatorConfig& cfg) {
  cfg.validate();
  if (cfg.pre_linearize) {
    EstimatorConfig inner = cfg;
    inner.pre_linearize = false;
    return estimate(srgb_linearize(img), inner);
  }
  switch (cfg.kind) {
    case EstimatorKind::GrayWorld: return gray_world(img, cfg);
    case EstimatorKind::ShadesOfGray: return shades_of_gray(img, cfg.minkowski_p, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator kind");
}

}  // namespace wbrf
