#pragma once

// Image error metrics (MSE on the 8-bit scale, mean angular error,
// CIEDE2000) and Mean/Q1/Q2/Q3 aggregation.

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "wbrf/color.hpp"
#include "wbrf/estimation.hpp"

namespace wbrf {

namespace detail {
inline void require_same_shape(const PixelMatrix& a, const PixelMatrix& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}
}  // namespace detail

/// Mean over all 3N entries of (255 a - 255 b)^2.
inline double mse(const PixelMatrix& a, const PixelMatrix& b) {
  detail::require_same_shape(a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = 255.0 * x[i] - 255.0 * y[i];
    sq[i] = d * d;
  }
  return detail::pairwise_sum(sq) / static_cast<double>(sq.size());
}

/// Angle between two RGB vectors in degrees, via atan2(|a x b|, a.b).
inline double angular_error_deg(const Rgb& a, const Rgb& b) {
  const double cx = a[1] * b[2] - a[2] * b[1];
  const double cy = a[2] * b[0] - a[0] * b[2];
  const double cz = a[0] * b[1] - a[1] * b[0];
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::atan2(cross, dot) / std::numbers::pi * 180.0;
}

/// Mean per-pixel angular error in degrees; pixels where either vector has
/// norm below epsilon are skipped.
inline double mae(const PixelMatrix& a, const PixelMatrix& b, double epsilon = kCastEpsilon) {
  detail::require_same_shape(a, b);
  std::vector<double> angles;
  angles.reserve(a.pixel_count());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const Rgb p = a.pixel(i);
    const Rgb q = b.pixel(i);
    const double np = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    const double nq = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    if (np < epsilon || nq < epsilon) continue;
    angles.push_back(angular_error_deg(p, q));
  }
  if (angles.empty()) throw Error(ErrorCode::AllPixelsDegenerate, "no pixel has a usable norm");
  return detail::pairwise_sum(angles) / static_cast<double>(angles.size());
}

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// sRGB primaries, D65 white, 2 degree observer.
inline constexpr double kSrgbToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                            {0.2126729, 0.7151522, 0.0721750},
                                            {0.0193339, 0.1191920, 0.9503041}};
inline constexpr double kD65White[3] = {0.95047, 1.00000, 1.08883};

inline Lab srgb_to_lab(const Rgb& srgb) {
  const Rgb lin{srgb_to_linear(srgb[0]), srgb_to_linear(srgb[1]), srgb_to_linear(srgb[2])};
  constexpr double delta = 6.0 / 29.0;
  const auto f = [](double t) {
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
  };
  double fx[3];
  for (int r = 0; r < 3; ++r) {
    const double xyz = kSrgbToXyz[r][0] * lin[0] + kSrgbToXyz[r][1] * lin[1] + kSrgbToXyz[r][2] * lin[2];
    fx[r] = f(xyz / kD65White[r]);
  }
  return {116.0 * fx[1] - 16.0, 500.0 * (fx[0] - fx[1]), 200.0 * (fx[1] - fx[2])};
}

/// Inverse of srgb_to_lab (no clipping).
inline Rgb lab_to_srgb(const Lab& lab) {
  constexpr double delta = 6.0 / 29.0;
  const auto finv = [](double t) {
    return t > delta ? t * t * t : 3.0 * delta * delta * (t - 4.0 / 29.0);
  };
  const double fy = (lab.l + 16.0) / 116.0;
  const double xyz[3] = {kD65White[0] * finv(fy + lab.a / 500.0), kD65White[1] * finv(fy),
                         kD65White[2] * finv(fy - lab.b / 200.0)};
  const Eigen::Matrix3d m{{kSrgbToXyz[0][0], kSrgbToXyz[0][1], kSrgbToXyz[0][2]},
                          {kSrgbToXyz[1][0], kSrgbToXyz[1][1], kSrgbToXyz[1][2]},
                          {kSrgbToXyz[2][0], kSrgbToXyz[2][1], kSrgbToXyz[2][2]}};
  const Eigen::Vector3d lin = m.partialPivLu().solve(Eigen::Vector3d(xyz[0], xyz[1], xyz[2]));
  return {linear_to_srgb(lin[0]), linear_to_srgb(lin[1]), linear_to_srgb(lin[2])};
}

/// CIEDE2000 with kL = kC = kH = 1.
inline double ciede2000(const Lab& x, const Lab& y) {
  using std::atan2, std::cos, std::exp, std::pow, std::sin, std::sqrt;
  constexpr double pi = std::numbers::pi;
  constexpr double deg = pi / 180.0;
  constexpr double pow25_7 = 6103515625.0;  // 25^7

  const double c1 = sqrt(x.a * x.a + x.b * x.b);
  const double c2 = sqrt(y.a * y.a + y.b * y.b);
  const double cbar7 = pow((c1 + c2) / 2.0, 7.0);
  const double g = 0.5 * (1.0 - sqrt(cbar7 / (cbar7 + pow25_7)));
  const double a1 = (1.0 + g) * x.a;
  const double a2 = (1.0 + g) * y.a;
  const double cp1 = sqrt(a1 * a1 + x.b * x.b);
  const double cp2 = sqrt(a2 * a2 + y.b * y.b);
  const auto hue = [&](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    double h = atan2(b, ap);
    if (h < 0.0) h += 2.0 * pi;
    return h;
  };
  const double h1 = hue(x.b, a1);
  const double h2 = hue(y.b, a2);

  const double dl = y.l - x.l;
  const double dc = cp2 - cp1;
  double dh = 0.0;
  if (cp1 * cp2 != 0.0) {
    dh = h2 - h1;
    if (dh > pi) dh -= 2.0 * pi;
    else if (dh < -pi) dh += 2.0 * pi;
  }
  const double dH = 2.0 * sqrt(cp1 * cp2) * sin(dh / 2.0);

  const double lbar = (x.l + y.l) / 2.0;
  const double cbarp = (cp1 + cp2) / 2.0;
  double hbar = h1 + h2;
  if (cp1 * cp2 != 0.0) {
    if (std::abs(h1 - h2) <= pi) hbar = (h1 + h2) / 2.0;
    else if (h1 + h2 < 2.0 * pi) hbar = (h1 + h2 + 2.0 * pi) / 2.0;
    else hbar = (h1 + h2 - 2.0 * pi) / 2.0;
  }
  const double t = 1.0 - 0.17 * cos(hbar - 30.0 * deg) + 0.24 * cos(2.0 * hbar) +
                   0.32 * cos(3.0 * hbar + 6.0 * deg) - 0.20 * cos(4.0 * hbar - 63.0 * deg);
  const double dtheta = 30.0 * deg * exp(-pow((hbar / deg - 275.0) / 25.0, 2.0));
  const double cbarp7 = pow(cbarp, 7.0);
  const double rc = 2.0 * sqrt(cbarp7 / (cbarp7 + pow25_7));
  const double lm = (lbar - 50.0) * (lbar - 50.0);
  const double sl = 1.0 + 0.015 * lm / sqrt(20.0 + lm);
  const double sc = 1.0 + 0.045 * cbarp;
  const double sh = 1.0 + 0.015 * cbarp * t;
  const double rt = -sin(2.0 * dtheta) * rc;

  const double tl = dl / sl;
  const double tc = dc / sc;
  const double th = dH / sh;
  return sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

/// Mean per-pixel CIEDE2000, treating both images as sRGB under D65.
inline double delta_e_2000(const PixelMatrix& a, const PixelMatrix& b) {
  detail::require_same_shape(a, b);
  std::vector<double> de(a.pixel_count());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const Rgb p = a.pixel(i);
    const Rgb q = b.pixel(i);
    de[i] = p == q ? 0.0 : ciede2000(srgb_to_lab(p), srgb_to_lab(q));
  }
  return detail::pairwise_sum(de) / static_cast<double>(de.size());
}

struct ImageError {
  double mse = 0.0;
  double mae_deg = 0.0;
  double de2000 = 0.0;
};

inline ImageError image_error(const PixelMatrix& corrected, const PixelMatrix& truth) {
  return {mse(corrected, truth), mae(corrected, truth), delta_e_2000(corrected, truth)};
}

struct MetricSummary {
  double mean = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
};

/// Quantile by linear interpolation between order statistics at (n - 1) p.
inline double quantile_inclusive(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "quantile of empty list");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline MetricSummary summarize_values(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "no values to summarize");
  double sum = 0.0;
  for (double v : values) sum += v;
  return {sum / static_cast<double>(values.size()), quantile_inclusive(values, 0.25),
          quantile_inclusive(values, 0.5), quantile_inclusive(values, 0.75)};
}

struct EvalReport {
  std::vector<ImageError> per_image;
  MetricSummary mse;
  MetricSummary mae;
  MetricSummary de2000;
};

inline EvalReport summarize(std::vector<ImageError> errors) {
  if (errors.empty()) throw Error(ErrorCode::EmptyList, "no per-image errors");
  std::vector<double> m, a, d;
  for (const ImageError& e : errors) {
    m.push_back(e.mse);
    a.push_back(e.mae_deg);
    d.push_back(e.de2000);
  }
  return {std::move(errors), summarize_values(m), summarize_values(a), summarize_values(d)};
}

struct NamedReport {
  std::string method;
  EvalReport report;
};

/// Plain-text table with Mean/Q1/Q2/Q3 for MSE, MAE and DeltaE 2000 per row.
inline std::string to_text_table(std::span<const NamedReport> rows) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-14s | %9s %9s %9s %9s | %7s %7s %7s %7s | %6s %6s %6s %6s\n",
                "Method", "MSE mean", "Q1", "Q2", "Q3", "MAE mean", "Q1", "Q2", "Q3", "DE mean",
                "Q1", "Q2", "Q3");
  out += buf;
  out += std::string(std::string_view(buf).size() - 1, '-') + "\n";
  for (const NamedReport& r : rows) {
    const EvalReport& e = r.report;
    std::snprintf(buf, sizeof buf,
                  "%-14s | %9.2f %9.2f %9.2f %9.2f | %7.2f %7.2f %7.2f %7.2f | %6.2f %6.2f %6.2f "
                  "%6.2f\n",
                  r.method.c_str(), e.mse.mean, e.mse.q1, e.mse.q2, e.mse.q3, e.mae.mean, e.mae.q1,
                  e.mae.q2, e.mae.q3, e.de2000.mean, e.de2000.q1, e.de2000.q2, e.de2000.q3);
    out += buf;
  }
  return out;
}

inline nlohmann::json to_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"q1", s.q1}, {"q2", s.q2}, {"q3", s.q3}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_image = nlohmann::json::array();
  for (const ImageError& e : r.per_image) {
    per_image.push_back({{"mse", e.mse}, {"mae_deg", e.mae_deg}, {"de2000", e.de2000}});
  }
  return {{"mse", to_json(r.mse)},
          {"mae_deg", to_json(r.mae)},
          {"de2000", to_json(r.de2000)},
          {"per_image", std::move(per_image)}};
}

inline nlohmann::json to_json(std::span<const NamedReport> rows) {
  nlohmann::json out = nlohmann::json::object();
  for (const NamedReport& r : rows) out[r.method] = to_json(r.report);
  return out;
}

}  // namespace wbrf
