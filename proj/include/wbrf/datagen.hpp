#pragma once

// Synthetic stand-in for a rendered white-balance dataset: patch scenes in
// linear light, pushed through a small camera pipeline (WB gains, color
// matrix, S-curve tone map, sRGB encoding) once with a wrong cast and once
// without.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "wbrf/estimation.hpp"
#include "wbrf/fitting.hpp"
#include "wbrf/image_io.hpp"
#include "wbrf/random.hpp"

namespace wbrf {

using ColorMatrix = std::array<Rgb, 3>;

inline constexpr ColorMatrix kIdentityCcm{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};

/// A camera-like color matrix (rows sum to one, so neutrals stay neutral).
inline constexpr ColorMatrix kDefaultCcm{
    {{1.45, -0.30, -0.15}, {-0.20, 1.35, -0.15}, {-0.05, -0.40, 1.45}}};

struct SceneOptions {
  std::size_t width = 64;
  std::size_t height = 48;
};

struct Scene {
  PixelMatrix image;
  /// Center pixel of the achromatic patch.
  std::size_t gray_x = 0;
  std::size_t gray_y = 0;
  double gray_level = 0.0;
};

/// Grid of flat patches with colors in [0.05, 0.95]; exactly one patch is
/// forced achromatic.
inline Scene synth_scene(std::uint64_t seed, std::size_t n_patches, const SceneOptions& opts = {}) {
  if (n_patches == 0) throw Error(ErrorCode::InvalidArgument, "need at least one patch");
  if (opts.width == 0 || opts.height == 0) {
    throw Error(ErrorCode::InvalidArgument, "scene must have at least one pixel");
  }
  std::mt19937_64 rng(mix_seed(seed, 0x5CE7E));
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_patches))));
  const std::size_t rows = (n_patches + cols - 1) / cols;

  std::vector<Rgb> colors(n_patches);
  for (Rgb& c : colors) {
    for (double& v : c) v = uniform_in(rng, 0.05, 0.95);
  }
  const std::size_t gray_patch = uniform_index(rng, n_patches);
  const double gray = uniform_in(rng, 0.3, 0.8);
  colors[gray_patch] = {gray, gray, gray};

  const auto patch_of = [&](std::size_t x, std::size_t y) {
    const std::size_t cell = (y * rows / opts.height) * cols + (x * cols / opts.width);
    return cell % n_patches;
  };

  std::vector<double> rgb(3 * opts.width * opts.height);
  for (std::size_t y = 0; y < opts.height; ++y) {
    for (std::size_t x = 0; x < opts.width; ++x) {
      const Rgb& c = colors[patch_of(x, y)];
      const std::size_t i = 3 * (y * opts.width + x);
      rgb[i] = c[0];
      rgb[i + 1] = c[1];
      rgb[i + 2] = c[2];
    }
  }

  // Center of the first grid cell that shows the gray patch.
  Scene scene{PixelMatrix(opts.width, opts.height, std::move(rgb)), 0, 0, gray};
  for (std::size_t cell = gray_patch; cell < rows * cols; cell += n_patches) {
    const std::size_t r = cell / cols;
    const std::size_t c = cell % cols;
    const std::size_t x0 = (c * opts.width + cols - 1) / cols;
    const std::size_t x1 = ((c + 1) * opts.width + cols - 1) / cols;
    const std::size_t y0 = (r * opts.height + rows - 1) / rows;
    const std::size_t y1 = ((r + 1) * opts.height + rows - 1) / rows;
    if (x1 > x0 && y1 > y0) {
      scene.gray_x = (x0 + x1 - 1) / 2;
      scene.gray_y = (y0 + y1 - 1) / 2;
      break;
    }
  }
  return scene;
}

struct RenderRecipe {
  Rgb cast{1.0, 1.0, 1.0};
  ColorMatrix ccm = kDefaultCcm;
  double tone_slope = 1.3;
  bool gamma = true;
  std::uint64_t seed = 0;

  void validate() const {
    for (double g : cast) {
      if (!(g >= 0.3 && g <= 3.0)) throw Error(ErrorCode::InvalidArgument, "cast gain outside [0.3, 3]");
    }
    for (const Rgb& row : ccm) {
      if (std::abs(row[0] + row[1] + row[2] - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "ccm rows must sum to 1");
      }
    }
    if (!(tone_slope >= 0.5 && tone_slope <= 2.0)) {
      throw Error(ErrorCode::InvalidArgument, "tone_slope outside [0.5, 2]");
    }
  }
};

/// t(x) = x^s / (x^s + (1 - x)^s).
inline double tone_curve(double x, double slope) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::pow(x, slope);
  return a / (a + std::pow(1.0 - x, slope));
}

inline PixelMatrix render_linear(const PixelMatrix& scene, const Rgb& gains, const RenderRecipe& r) {
  const auto in = scene.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < scene.pixel_count(); ++i) {
    const Rgb raw{in[3 * i] * gains[0], in[3 * i + 1] * gains[1], in[3 * i + 2] * gains[2]};
    for (int c = 0; c < 3; ++c) {
      double v = r.ccm[c][0] * raw[0] + r.ccm[c][1] * raw[1] + r.ccm[c][2] * raw[2];
      v = std::clamp(v, 0.0, 1.0);
      v = tone_curve(v, r.tone_slope);
      if (r.gamma) v = linear_to_srgb(v);
      out[3 * i + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return PixelMatrix(scene.width(), scene.height(), std::move(out));
}

/// (input rendered with the recipe's cast, target rendered with neutral gains).
inline TrainingPair render(const PixelMatrix& scene, const RenderRecipe& recipe) {
  recipe.validate();
  return {render_linear(scene, recipe.cast, recipe), render_linear(scene, {1.0, 1.0, 1.0}, recipe)};
}

/// Rounds every value to the nearest 8-bit level, as a PNG round trip would.
inline PixelMatrix quantize_8bit(const PixelMatrix& img) {
  const std::vector<std::uint8_t> q = img.to_8bit();
  return PixelMatrix::from_8bit(img.width(), img.height(), q);
}

// ---------------------------------------------------------------------------
// Corpus manifests

struct CorpusEntry {
  std::uint64_t scene_seed = 0;
  std::size_t cast_index = 0;
};

struct CorpusSpec {
  SceneOptions scene{};
  std::size_t n_patches = 24;
  ColorMatrix ccm = kDefaultCcm;
  double tone_slope = 1.3;
  bool gamma = true;
  std::vector<Rgb> casts;
  std::vector<CorpusEntry> train;
  std::vector<CorpusEntry> test;

  RenderRecipe recipe(const CorpusEntry& e) const {
    return {casts.at(e.cast_index), ccm, tone_slope, gamma, e.scene_seed};
  }
};

/// Grid of WB errors from reddish to bluish (9 steps) crossed with three
/// green tints. Gains are 2^(+-0.75 a) on red/blue and 2^t on green.
inline std::vector<Rgb> default_cast_grid() {
  std::vector<Rgb> casts;
  for (int tint = -1; tint <= 1; ++tint) {
    for (int step = -4; step <= 4; ++step) {
      const double a = step / 4.0;
      casts.push_back({std::exp2(0.75 * a), std::exp2(0.15 * tint), std::exp2(-0.75 * a)});
    }
  }
  return casts;
}

/// `scenes` scenes starting at `first_seed`, each paired with
/// `casts_per_scene` distinct casts drawn from the grid.
inline std::vector<CorpusEntry> corpus_entries(std::uint64_t first_seed, std::size_t scenes,
                                               std::size_t casts_per_scene, std::size_t n_casts) {
  std::vector<CorpusEntry> entries;
  for (std::size_t s = 0; s < scenes; ++s) {
    const std::uint64_t seed = first_seed + s;
    std::mt19937_64 rng(mix_seed(seed, 0xCA57));
    std::vector<std::size_t> pool(n_casts);
    for (std::size_t i = 0; i < n_casts; ++i) pool[i] = i;
    for (std::size_t j = 0; j < casts_per_scene && j < n_casts; ++j) {
      const std::size_t pick = j + uniform_index(rng, n_casts - j);
      std::swap(pool[j], pool[pick]);
      entries.push_back({seed, pool[j]});
    }
  }
  return entries;
}

/// 120 training scenes x 5 casts and 30 held-out scenes x 5 casts.
inline CorpusSpec default_corpus() {
  CorpusSpec spec;
  spec.casts = default_cast_grid();
  spec.train = corpus_entries(0, 120, 5, spec.casts.size());
  spec.test = corpus_entries(1'000'000, 30, 5, spec.casts.size());
  return spec;
}

struct NamedPair {
  std::string name;
  TrainingPair pair;
};

inline std::string entry_stem(const CorpusEntry& e) { return "scene" + std::to_string(e.scene_seed); }

inline std::string entry_name(const CorpusEntry& e) {
  return entry_stem(e) + "_cast" + std::to_string(e.cast_index);
}

/// Renders and quantizes one entry, so in-memory pairs equal their PNG files.
inline NamedPair generate_pair(const CorpusSpec& spec, const CorpusEntry& e) {
  const Scene scene = synth_scene(e.scene_seed, spec.n_patches, spec.scene);
  const TrainingPair raw = render(scene.image, spec.recipe(e));
  return {entry_name(e), TrainingPair(quantize_8bit(raw.input), quantize_8bit(raw.target))};
}

inline std::vector<NamedPair> generate_pairs(const CorpusSpec& spec,
                                             const std::vector<CorpusEntry>& entries) {
  std::vector<NamedPair> out;
  out.reserve(entries.size());
  for (const CorpusEntry& e : entries) out.push_back(generate_pair(spec, e));
  return out;
}

inline nlohmann::json to_json(const CorpusSpec& spec) {
  const auto entries = [](const std::vector<CorpusEntry>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const CorpusEntry& e : list) arr.push_back({{"scene_seed", e.scene_seed}, {"cast", e.cast_index}});
    return arr;
  };
  nlohmann::json ccm = nlohmann::json::array();
  for (const Rgb& row : spec.ccm) ccm.push_back(row);
  nlohmann::json casts = nlohmann::json::array();
  for (const Rgb& c : spec.casts) casts.push_back(c);
  return {{"format", "wbrf-corpus"},
          {"version", 1},
          {"width", spec.scene.width},
          {"height", spec.scene.height},
          {"n_patches", spec.n_patches},
          {"ccm", ccm},
          {"tone_slope", spec.tone_slope},
          {"gamma", spec.gamma},
          {"casts", casts},
          {"train", entries(spec.train)},
          {"test", entries(spec.test)}};
}

inline CorpusSpec corpus_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "wbrf-corpus" || j.at("version") != 1) {
      throw Error(ErrorCode::FormatVersionMismatch, "unsupported corpus manifest");
    }
    CorpusSpec spec;
    spec.scene.width = j.at("width").get<std::size_t>();
    spec.scene.height = j.at("height").get<std::size_t>();
    spec.n_patches = j.at("n_patches").get<std::size_t>();
    for (std::size_t r = 0; r < 3; ++r) spec.ccm[r] = j.at("ccm").at(r).get<Rgb>();
    spec.tone_slope = j.at("tone_slope").get<double>();
    spec.gamma = j.at("gamma").get<bool>();
    spec.casts = j.at("casts").get<std::vector<Rgb>>();
    const auto entries = [&](const nlohmann::json& arr) {
      std::vector<CorpusEntry> out;
      for (const auto& e : arr) {
        CorpusEntry entry{e.at("scene_seed").get<std::uint64_t>(), e.at("cast").get<std::size_t>()};
        if (entry.cast_index >= spec.casts.size()) {
          throw Error(ErrorCode::InvalidArgument, "corpus entry references unknown cast");
        }
        out.push_back(entry);
      }
      return out;
    };
    spec.train = entries(j.at("train"));
    spec.test = entries(j.at("test"));
    for (std::size_t i = 0; i < spec.casts.size(); ++i) spec.recipe({0, i}).validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("corpus manifest: ") + e.what());
  }
}

inline CorpusSpec load_corpus_manifest(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  const auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, "manifest is not valid JSON");
  return corpus_from_json(j);
}

inline void save_corpus_manifest(const CorpusSpec& spec, const std::filesystem::path& path) {
  const std::string text = to_json(spec).dump(2) + "\n";
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Writes <dir>/{train,test}/{input,gt}/ PNGs plus <dir>/manifest.json.
/// Inputs are named <stem>_cast<i>.png, ground truth <stem>.png.
inline void write_corpus(const CorpusSpec& spec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (const auto& [split, entries] : {std::pair{"train", &spec.train}, std::pair{"test", &spec.test}}) {
    const fs::path input_dir = dir / split / "input";
    const fs::path gt_dir = dir / split / "gt";
    fs::create_directories(input_dir);
    fs::create_directories(gt_dir);
    std::set<std::uint64_t> scenes_written;
    for (const CorpusEntry& e : *entries) {
      const NamedPair np = generate_pair(spec, e);
      write_image(input_dir / (np.name + ".png"), np.pair.input);
      if (scenes_written.insert(e.scene_seed).second) {
        write_image(gt_dir / (entry_stem(e) + ".png"), np.pair.target);
      }
    }
  }
  save_corpus_manifest(spec, dir / "manifest.json");
}

}  // namespace wbrf
