#pragma once

// On-disk paired datasets.
//
// Two layouts are recognized:
//   split: <root>/input/<stem>[_<anything>].{png,ppm} with <root>/gt/<stem>.{png,ppm}
//   flat:  <root>/<stem>_<anything>.{png,ppm} with <root>/<stem><gt_suffix>.{png,ppm}
// An input is matched to the longest ground-truth stem that equals its own
// stem or prefixes it followed by '_'.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wbrf/datagen.hpp"
#include "wbrf/image_io.hpp"

namespace wbrf {

using DiagnosticSink = std::function<void(const std::string&)>;

inline void stderr_sink(const std::string& msg) { std::cerr << "wbrf: " << msg << "\n"; }

struct DirSpec {
  std::filesystem::path root;
  /// Flat layout only: ground-truth file suffix before the extension.
  std::string gt_suffix = "_GT";
  DiagnosticSink diagnostics = stderr_sink;
};

struct PairFiles {
  std::filesystem::path input;
  std::filesystem::path gt;
};

namespace detail {

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm";
}

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::optional<std::filesystem::path> match_gt(
    const std::string& stem, const std::map<std::string, std::filesystem::path>& gts) {
  std::optional<std::filesystem::path> best;
  std::size_t best_len = 0;
  for (const auto& [gt_stem, path] : gts) {
    const bool exact = stem == gt_stem;
    const bool prefixed = stem.size() > gt_stem.size() && stem.compare(0, gt_stem.size(), gt_stem) == 0 &&
                          stem[gt_stem.size()] == '_';
    if ((exact || prefixed) && gt_stem.size() >= best_len) {
      best = path;
      best_len = gt_stem.size();
    }
  }
  return best;
}

}  // namespace detail

/// Resolves the file pairs of a dataset directory without decoding images.
inline std::vector<PairFiles> scan_pairs(const DirSpec& spec) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(spec.root)) {
    throw Error(ErrorCode::IoError, "not a directory: " + spec.root.string());
  }
  std::map<std::string, fs::path> gts;
  std::vector<fs::path> inputs;
  if (fs::is_directory(spec.root / "input") && fs::is_directory(spec.root / "gt")) {
    for (const fs::path& p : detail::list_images(spec.root / "gt")) gts[p.stem().string()] = p;
    inputs = detail::list_images(spec.root / "input");
  } else {
    for (const fs::path& p : detail::list_images(spec.root)) {
      const std::string stem = p.stem().string();
      if (!spec.gt_suffix.empty() && stem.size() > spec.gt_suffix.size() &&
          stem.ends_with(spec.gt_suffix)) {
        gts[stem.substr(0, stem.size() - spec.gt_suffix.size())] = p;
      } else {
        inputs.push_back(p);
      }
    }
  }
  std::vector<PairFiles> pairs;
  for (const fs::path& in : inputs) {
    if (auto gt = detail::match_gt(in.stem().string(), gts)) {
      pairs.push_back({in, *gt});
    } else if (spec.diagnostics) {
      spec.diagnostics("no ground truth for " + in.filename().string() + ", skipped");
    }
  }
  if (pairs.empty()) throw Error(ErrorCode::NoPairsFound, spec.root.string());
  return pairs;
}

/// Lazily decodes pairs; unreadable or mismatched pairs are reported and skipped.
class PairStream {
 public:
  explicit PairStream(DirSpec spec) : spec_(std::move(spec)), files_(scan_pairs(spec_)) {}

  std::optional<NamedPair> next() {
    while (pos_ < files_.size()) {
      const PairFiles& f = files_[pos_++];
      try {
        PixelMatrix input = read_image(f.input);
        PixelMatrix gt = read_image(f.gt);
        if (!input.same_shape(gt)) {
          report(f.input.filename().string() + ": size differs from " + f.gt.filename().string() +
                 ", skipped");
          continue;
        }
        return NamedPair{f.input.stem().string(), TrainingPair(std::move(input), std::move(gt))};
      } catch (const Error& e) {
        report(f.input.filename().string() + ": " + e.what() + ", skipped");
      }
    }
    return std::nullopt;
  }

  const std::vector<PairFiles>& files() const noexcept { return files_; }

 private:
  void report(const std::string& msg) const {
    if (spec_.diagnostics) spec_.diagnostics(msg);
  }

  DirSpec spec_;
  std::vector<PairFiles> files_;
  std::size_t pos_ = 0;
};

inline PairStream ingest_pairs(DirSpec spec) { return PairStream(std::move(spec)); }

}  // namespace wbrf
