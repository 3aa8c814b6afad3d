#pragma once

// Baseline and rectified correction methods evaluated side by side.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wbrf/corrector.hpp"
#include "wbrf/datagen.hpp"
#include "wbrf/metrics.hpp"

namespace wbrf {

enum class Method { DiagGw, DiagSog, DiagGwLin, DiagSogLin, RfGw, RfSog };

inline constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::DiagGw, "diag-gw"},
    {Method::DiagSog, "diag-sog"},
    {Method::DiagGwLin, "diag-gw-lin"},
    {Method::DiagSogLin, "diag-sog-lin"},
    {Method::RfGw, "rf-gw"},
    {Method::RfSog, "rf-sog"},
}};

inline std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "?";
}

inline std::string valid_method_names() {
  std::string out;
  for (const auto& [method, name] : kMethodNames) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

inline Method parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown method '" + std::string(name) + "'; valid: " + valid_method_names());
}

inline EstimatorKind method_estimator(Method m) {
  switch (m) {
    case Method::DiagGw:
    case Method::DiagGwLin:
    case Method::RfGw: return EstimatorKind::GrayWorld;
    default: return EstimatorKind::ShadesOfGray;
  }
}

inline bool is_rectified(Method m) { return m == Method::RfGw || m == Method::RfSog; }

struct EvalOptions {
  double sog_p = 6.0;
  /// Model serving rf-gw / rf-sog respectively.
  const RectificationModel* gw_model = nullptr;
  const RectificationModel* sog_model = nullptr;
};

/// Output of one method on one image.
///   diag-*      : diagonal correction of the rendered image with the estimate.
///   diag-*-lin  : estimate and correct on the linearized image, then re-encode.
///   rf-*        : rectified polynomial correction with the model's estimator
///                 settings and the requested estimator kind.
inline PixelMatrix apply_method(const PixelMatrix& img, Method m, const EvalOptions& opts) {
  EstimatorConfig est{.kind = method_estimator(m), .minkowski_p = opts.sog_p};
  switch (m) {
    case Method::DiagGw:
    case Method::DiagSog: return correct_diagonal_baseline(img, estimate(img, est));
    case Method::DiagGwLin:
    case Method::DiagSogLin: {
      const PixelMatrix lin = srgb_linearize(img);
      return srgb_delinearize(correct_diagonal_baseline(lin, estimate(lin, est)));
    }
    case Method::RfGw:
    case Method::RfSog: {
      const RectificationModel* model = m == Method::RfGw ? opts.gw_model : opts.sog_model;
      if (model == nullptr) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string(method_name(m)) + " needs a model trained with that estimator");
      }
      EstimatorConfig cfg = model->estimator;
      cfg.kind = est.kind;
      if (cfg.kind == EstimatorKind::ShadesOfGray && model->estimator.kind != cfg.kind) {
        cfg.minkowski_p = opts.sog_p;
      }
      return correct(img, {AutoSource{cfg}}, *model).corrected;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

/// Evaluates every method on every pair pulled from `next`.
inline std::vector<NamedReport> evaluate_methods(
    const std::function<std::optional<NamedPair>()>& next, const std::vector<Method>& methods,
    const EvalOptions& opts) {
  std::vector<std::vector<ImageError>> errors(methods.size());
  while (std::optional<NamedPair> np = next()) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const PixelMatrix out = apply_method(np->pair.input, methods[i], opts);
      errors[i].push_back(image_error(out, np->pair.target));
    }
  }
  if (errors.empty() || errors.front().empty()) {
    throw Error(ErrorCode::EmptyList, "no image pairs to evaluate");
  }
  std::vector<NamedReport> rows;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    rows.push_back({std::string(method_name(methods[i])), summarize(std::move(errors[i]))});
  }
  return rows;
}

inline std::vector<NamedReport> evaluate_methods(const std::vector<NamedPair>& pairs,
                                                 const std::vector<Method>& methods,
                                                 const EvalOptions& opts) {
  std::size_t i = 0;
  return evaluate_methods(
      [&]() -> std::optional<NamedPair> {
        if (i == pairs.size()) return std::nullopt;
        return pairs[i++];
      },
      methods, opts);
}

}  // namespace wbrf
