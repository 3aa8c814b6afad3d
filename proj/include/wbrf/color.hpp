#pragma once

// Core color math: image storage, the 11-term polynomial kernel, cast
// vectors, and the diagonal / polynomial correction operators.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wbrf/error.hpp"

namespace wbrf {

using Rgb = std::array<double, 3>;

inline constexpr double kCastEpsilon = 1e-6;
inline constexpr int kKernelTerms = 11;
inline constexpr int kPolyMapSize = 3 * kKernelTerms;

/// Layout tag stored in model files: 33-vector <-> 3x11 matrix, column-major.
inline constexpr std::uint32_t kLayoutColumnMajor3x11 = 0x0003000Bu;

/// Image as 3xN RGB triplets in [0, 1], stored pixel-interleaved (which is
/// exactly column-major 3xN).
class PixelMatrix {
 public:
  PixelMatrix() = default;

  PixelMatrix(std::size_t width, std::size_t height, std::vector<double> rgb)
      : width_(width), height_(height), data_(std::move(rgb)) {
    if (width_ == 0 || height_ == 0) {
      throw Error(ErrorCode::InvalidArgument, "image must have at least one pixel");
    }
    if (data_.size() != 3 * width_ * height_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(3 * width_ * height_) + " values, got " +
                      std::to_string(data_.size()));
    }
    for (double v : data_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "pixel value outside [0, 1]: " + std::to_string(v));
      }
    }
  }

  /// Clamps every value to [0, 1] instead of rejecting; NaN maps to 0.
  static PixelMatrix clipped(std::size_t width, std::size_t height, std::vector<double> rgb) {
    for (double& v : rgb) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    return PixelMatrix(width, height, std::move(rgb));
  }

  static PixelMatrix filled(std::size_t width, std::size_t height, const Rgb& color) {
    std::vector<double> rgb(3 * width * height);
    for (std::size_t i = 0; i < width * height; ++i) {
      rgb[3 * i] = color[0];
      rgb[3 * i + 1] = color[1];
      rgb[3 * i + 2] = color[2];
    }
    return PixelMatrix(width, height, std::move(rgb));
  }

  static PixelMatrix from_8bit(std::size_t width, std::size_t height,
                               std::span<const std::uint8_t> rgb8) {
    std::vector<double> rgb(rgb8.size());
    std::transform(rgb8.begin(), rgb8.end(), rgb.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return PixelMatrix(width, height, std::move(rgb));
  }

  /// Quantizes to 8 bits, rounding half away from zero.
  std::vector<std::uint8_t> to_8bit() const {
    std::vector<std::uint8_t> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](double v) {
      return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
    });
    return out;
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> data() const noexcept { return data_; }

  Rgb pixel(std::size_t i) const { return {data_[3 * i], data_[3 * i + 1], data_[3 * i + 2]}; }
  Rgb pixel(std::size_t x, std::size_t y) const { return pixel(y * width_ + x); }
  double at(int channel, std::size_t i) const { return data_[3 * i + channel]; }

  bool same_shape(const PixelMatrix& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const PixelMatrix&, const PixelMatrix&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

struct CastOptions {
  bool strict = false;
  double epsilon = kCastEpsilon;
};

/// Unit-length, strictly positive color-cast vector.
class CastVector {
 public:
  /// Components below epsilon are clamped (or rejected in strict mode with
  /// `underflow_code`), then the vector is normalized.
  static CastVector from_rgb(const Rgb& raw, CastOptions opts = {},
                             ErrorCode underflow_code = ErrorCode::ComponentUnderflow) {
    Rgb v = raw;
    for (int c = 0; c < 3; ++c) {
      if (!std::isfinite(v[c])) {
        throw Error(ErrorCode::InvalidArgument, "cast component is not finite");
      }
      if (v[c] < opts.epsilon) {
        if (opts.strict) {
          throw Error(underflow_code, "channel " + std::to_string(c) + " below epsilon");
        }
        v[c] = opts.epsilon;
      }
    }
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    // Already-unit input is kept bit-for-bit so normalization is idempotent.
    if (std::abs(norm - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return CastVector(v);
    return CastVector({v[0] / norm, v[1] / norm, v[2] / norm});
  }

  /// Adopts an already-normalized vector bit-for-bit (used when loading models).
  static CastVector from_unit(const Rgb& unit) {
    const double norm2 = unit[0] * unit[0] + unit[1] * unit[1] + unit[2] * unit[2];
    if (!(unit[0] > 0.0 && unit[1] > 0.0 && unit[2] > 0.0) || !(std::abs(norm2 - 1.0) <= 1e-12)) {
      throw Error(ErrorCode::InvalidArgument, "not a positive unit vector");
    }
    return CastVector(unit);
  }

  const Rgb& values() const noexcept { return v_; }
  double operator[](int c) const { return v_[c]; }

  double dot(const CastVector& other) const noexcept {
    return v_[0] * other.v_[0] + v_[1] * other.v_[1] + v_[2] * other.v_[2];
  }

  friend bool operator==(const CastVector&, const CastVector&) = default;

 private:
  explicit CastVector(const Rgb& unit) : v_(unit) {}
  Rgb v_{};
};

/// ell = [g_G / g_R, 1, g_G / g_B].
class CastCorrectionVector {
 public:
  CastCorrectionVector(double red_gain, double blue_gain) : red_(red_gain), blue_(blue_gain) {
    if (!(std::isfinite(red_) && std::isfinite(blue_) && red_ > 0.0 && blue_ > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "correction gains must be finite and positive");
    }
  }

  double red() const noexcept { return red_; }
  double blue() const noexcept { return blue_; }
  Rgb values() const noexcept { return {red_, 1.0, blue_}; }
  Eigen::Vector3d vector() const { return {red_, 1.0, blue_}; }

  friend bool operator==(const CastCorrectionVector&, const CastCorrectionVector&) = default;

 private:
  double red_;
  double blue_;
};

inline CastCorrectionVector cast_correction_vector(const CastVector& gamma) {
  return {gamma[1] / gamma[0], gamma[1] / gamma[2]};
}

/// Raw-input variant: applies the epsilon clamp (or strict check) first.
inline CastCorrectionVector cast_correction_vector(const Rgb& raw_gamma, CastOptions opts = {}) {
  return cast_correction_vector(CastVector::from_rgb(raw_gamma, opts));
}

using PolyMatrix = Eigen::Matrix<double, 3, kKernelTerms>;
using PolyVector = Eigen::Matrix<double, kPolyMapSize, 1>;

/// Vectorized 3x11 polynomial mapping. Element (i, j) of the matrix form is
/// m[3 * j + i].
class PolyMap {
 public:
  PolyMap() : m_(PolyVector::Zero()) {}
  explicit PolyMap(const PolyVector& m) : m_(m) {
    if (!m_.allFinite()) throw Error(ErrorCode::InvalidArgument, "polymap has non-finite entries");
  }

  static PolyMap from_vector(std::span<const double> values) {
    if (values.size() != kPolyMapSize) {
      throw Error(ErrorCode::DimensionMismatch,
                  "polymap needs 33 values, got " + std::to_string(values.size()));
    }
    PolyVector m;
    std::copy(values.begin(), values.end(), m.data());
    return PolyMap(m);
  }

  static PolyMap from_matrix(const PolyMatrix& matrix) {
    return PolyMap(Eigen::Map<const PolyVector>(matrix.data()));
  }

  /// [I3 | 0]: maps every pixel to itself.
  static PolyMap identity() {
    PolyMatrix a = PolyMatrix::Zero();
    a.leftCols<3>().setIdentity();
    return from_matrix(a);
  }

  /// diag(ell) embedded in the linear columns.
  static PolyMap diagonal(const CastCorrectionVector& ell) {
    PolyMatrix a = PolyMatrix::Zero();
    a(0, 0) = ell.red();
    a(1, 1) = 1.0;
    a(2, 2) = ell.blue();
    return from_matrix(a);
  }

  const PolyVector& vector() const noexcept { return m_; }
  PolyMatrix matrix() const { return Eigen::Map<const PolyMatrix>(m_.data()); }
  double operator[](int i) const { return m_[i]; }

  friend bool operator==(const PolyMap& a, const PolyMap& b) { return a.m_ == b.m_; }

 private:
  PolyVector m_;
};

inline PolyMatrix reshape(const PolyMap& m) { return m.matrix(); }
inline PolyVector vectorize(const PolyMatrix& a) { return PolyMap::from_matrix(a).vector(); }

/// Dynamic-size overload that checks dimensions.
inline PolyMatrix reshape(std::span<const double> m) { return PolyMap::from_vector(m).matrix(); }

using KernelTerms = std::array<double, kKernelTerms>;

/// [R, G, B, RG, RB, GB, R^2, G^2, B^2, RGB, 1].
inline KernelTerms kernel_terms(double r, double g, double b) noexcept {
  return {r, g, b, r * g, r * b, g * b, r * r, g * g, b * b, r * g * b, 1.0};
}

inline Eigen::Matrix<double, kKernelTerms, Eigen::Dynamic> kernel_expand(const PixelMatrix& img) {
  const std::size_t n = img.pixel_count();
  Eigen::Matrix<double, kKernelTerms, Eigen::Dynamic> out(kKernelTerms, static_cast<Eigen::Index>(n));
  const auto data = img.data();
  for (std::size_t i = 0; i < n; ++i) {
    const KernelTerms t = kernel_terms(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
    for (int j = 0; j < kKernelTerms; ++j) out(j, static_cast<Eigen::Index>(i)) = t[j];
  }
  return out;
}

inline PixelMatrix apply_diagonal(const PixelMatrix& img, const CastCorrectionVector& ell) {
  const Rgb gains = ell.values();
  std::vector<double> out(img.data().begin(), img.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(out[i] * gains[i % 3], 0.0, 1.0);
  }
  return PixelMatrix(img.width(), img.height(), std::move(out));
}

inline PixelMatrix apply_polymap(const PixelMatrix& img, const PolyMap& m) {
  const PolyMatrix a = m.matrix();
  const auto in = img.data();
  const std::size_t n = img.pixel_count();
  std::vector<double> out(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const KernelTerms t = kernel_terms(in[3 * i], in[3 * i + 1], in[3 * i + 2]);
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int j = 0; j < kKernelTerms; ++j) acc += a(c, j) * t[j];
      // NaN cannot arise from finite inputs; clamp handles overshoot.
      out[3 * i + c] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return PixelMatrix(img.width(), img.height(), std::move(out));
}

}  // namespace wbrf
