// wbrf: train rectification models, correct images, evaluate methods, and
// host the interactive correction service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "wbrf/service.hpp"
#include "wbrf/wbrf.hpp"

namespace {

using namespace wbrf;

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " needs " + std::to_string(expected) + " comma-separated values");
  }
  return out;
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "gw") return EstimatorKind::GrayWorld;
  if (name == "sog") return EstimatorKind::ShadesOfGray;
  throw Error(ErrorCode::InvalidArgument, "estimator must be gw or sog");
}

CorpusSpec corpus_for(const std::string& synth) {
  return synth == "default" ? default_corpus() : load_corpus_manifest(synth);
}

void print_cast(const CastVector& gamma, const CastCorrectionVector& ell) {
  std::printf("gamma: %.6f %.6f %.6f\n", gamma[0], gamma[1], gamma[2]);
  std::printf("ell: %.6f %.6f %.6f\n", ell.red(), 1.0, ell.blue());
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string synth;
  std::string gt_suffix = "_GT";
  std::size_t k = 50;
  std::uint64_t seed = 0;
  std::string estimator = "gw";
  double sog_p = 6.0;
  bool linearize = false;
  bool mask_saturated = false;
  std::size_t max_samples = 50'000;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.k = a.k;
  cfg.seed = a.seed;
  cfg.estimator = {.kind = parse_estimator(a.estimator),
                   .minkowski_p = a.sog_p,
                   .pre_linearize = a.linearize,
                   .mask_saturated = a.mask_saturated};
  cfg.fit.max_samples = a.max_samples;

  TrainReport report;
  std::size_t pair_count = 0;
  if (!a.synth.empty()) {
    const CorpusSpec spec = corpus_for(a.synth);
    std::size_t i = 0;
    report = train_with_report(
        [&]() -> std::optional<TrainingPair> {
          if (i == spec.train.size()) return std::nullopt;
          ++pair_count;
          return generate_pair(spec, spec.train[i++]).pair;
        },
        cfg);
  } else {
    PairStream stream = ingest_pairs({.root = a.data, .gt_suffix = a.gt_suffix});
    report = train_with_report(
        [&]() -> std::optional<TrainingPair> {
          auto np = stream.next();
          if (!np) return std::nullopt;
          ++pair_count;
          return std::move(np->pair);
        },
        cfg);
  }
  save_model(report.model, a.out);

  std::printf("trained k=%zu on %zu pairs, %d clustering iterations\n", report.model.k(), pair_count,
              report.cluster_iterations);
  std::printf("mean fit residual (RMS per channel): %.6f\n", report.mean_fit_rms);
  std::printf("cluster occupancy:\n");
  const std::size_t peak = *std::max_element(report.occupancy.begin(), report.occupancy.end());
  for (std::size_t c = 0; c < report.occupancy.size(); ++c) {
    const std::size_t bar = peak == 0 ? 0 : (report.occupancy[c] * 40 + peak - 1) / peak;
    std::printf("  %3zu %5zu %s\n", c, report.occupancy[c], std::string(bar, '#').c_str());
  }
  std::printf("model written to %s\n", a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct CorrectArgs {
  std::string model;
  std::string in;
  std::string out;
  bool auto_mode = false;
  std::string pixel;
  std::string color;
  bool baseline_diagonal = false;
  std::string estimator;
  double sog_p = 6.0;
  bool single_pixel = false;
  bool strict = false;
};

int cmd_correct(const CorrectArgs& a) {
  const PixelMatrix img = read_image(a.in);
  std::optional<RectificationModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  if (!model && !a.baseline_diagonal) {
    throw Error(ErrorCode::InvalidArgument, "--model (or WBRF_MODEL) is required");
  }

  CorrectionRequest req;
  req.options = {.single_pixel = a.single_pixel, .strict = a.strict};
  if (!a.pixel.empty()) {
    const auto xy = parse_list(a.pixel, 2, "--pixel");
    if (xy[0] != std::floor(xy[0]) || xy[1] != std::floor(xy[1])) {
      throw Error(ErrorCode::InvalidArgument, "--pixel needs integer coordinates");
    }
    req.source = ManualPixel{static_cast<long long>(xy[0]), static_cast<long long>(xy[1])};
  } else if (!a.color.empty()) {
    const auto rgb = parse_list(a.color, 3, "--color");
    req.source = ManualColor{{rgb[0], rgb[1], rgb[2]}};
  } else {
    EstimatorConfig est = model ? model->estimator : EstimatorConfig{};
    if (!a.estimator.empty()) {
      est.kind = parse_estimator(a.estimator);
      est.minkowski_p = a.sog_p;
    }
    req.source = AutoSource{est};
  }

  if (a.baseline_diagonal) {
    const CastVector gamma = resolve_cast(img, req);
    write_image(a.out, correct_diagonal_baseline(img, gamma));
    print_cast(gamma, cast_correction_vector(gamma));
    std::printf("cluster: none (diagonal baseline)\n");
    return 0;
  }
  const CorrectionResult result = correct(img, req, *model);
  if (result.warning) std::fprintf(stderr, "wbrf: warning: %s\n", result.warning->c_str());
  write_image(a.out, result.corrected);
  print_cast(result.gamma_used, result.ell_used);
  std::printf("cluster: %zu\n", result.cluster_index);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> models;
  std::string data;
  std::string synth;
  std::string gt_suffix = "_GT";
  std::string methods = "diag-gw,diag-gw-lin,rf-gw";
  double sog_p = 6.0;
  std::string json;
};

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<Method> methods;
  std::stringstream ss(a.methods);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) methods.push_back(parse_method(name));
  }
  if (methods.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no methods given; valid: " + valid_method_names());
  }

  std::vector<RectificationModel> models;
  for (const std::string& path : a.models) models.push_back(load_model(path));
  EvalOptions opts{.sog_p = a.sog_p};
  for (const RectificationModel& m : models) {
    const RectificationModel*& slot =
        m.estimator.kind == EstimatorKind::GrayWorld ? opts.gw_model : opts.sog_model;
    if (slot == nullptr) slot = &m;
  }

  std::vector<NamedReport> rows;
  if (!a.synth.empty()) {
    const CorpusSpec spec = corpus_for(a.synth);
    std::size_t i = 0;
    rows = evaluate_methods(
        [&]() -> std::optional<NamedPair> {
          if (i == spec.test.size()) return std::nullopt;
          return generate_pair(spec, spec.test[i++]);
        },
        methods, opts);
  } else {
    PairStream stream = ingest_pairs({.root = a.data, .gt_suffix = a.gt_suffix});
    rows = evaluate_methods([&] { return stream.next(); }, methods, opts);
  }

  std::printf("%s", to_text_table(rows).c_str());
  if (!a.json.empty()) {
    const std::string text = to_json(std::span<const NamedReport>(rows)).dump(2) + "\n";
    write_file_bytes(a.json, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string manifest = "default";
  std::string out;
  std::string write_manifest;
};

int cmd_synth(const SynthArgs& a) {
  const CorpusSpec spec = corpus_for(a.manifest);
  if (!a.write_manifest.empty()) {
    save_corpus_manifest(spec, a.write_manifest);
    std::printf("manifest written to %s\n", a.write_manifest.c_str());
  }
  if (!a.out.empty()) {
    write_corpus(spec, a.out);
    std::printf("wrote %zu training and %zu test pairs under %s\n", spec.train.size(),
                spec.test.size(), a.out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string model;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string static_dir;
  std::size_t capacity = 32;
  std::size_t max_pixels = 24'000'000;
  bool single_pixel = false;
};

httplib::Server* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  auto model = std::make_shared<const RectificationModel>(load_model(a.model));
  ServiceConfig cfg;
  cfg.capacity = a.capacity;
  cfg.max_pixels = a.max_pixels;
  cfg.static_dir = a.static_dir;
  cfg.correction.single_pixel = a.single_pixel;
  CorrectionService service(model, cfg);

  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::printf("serving k=%zu model on http://%s:%d\n", model->k(), a.host.c_str(), a.port);
  std::fflush(stdout);
  if (!server.listen(a.host, a.port)) {
    throw Error(ErrorCode::IoError, "cannot listen on " + a.host + ":" + std::to_string(a.port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"White-balance correction with cluster-indexed rectification functions"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Fit a rectification model from image pairs");
  auto* data_opt = train->add_option("--data", train_args.data, "Paired dataset directory");
  auto* synth_opt = train->add_option("--synth", train_args.synth,
                                      "Corpus manifest, or 'default' for the built-in corpus");
  data_opt->excludes(synth_opt);
  train->add_option("--gt-suffix", train_args.gt_suffix, "Ground-truth suffix for flat layouts");
  train->add_option("--k", train_args.k, "Number of cast clusters")->check(CLI::PositiveNumber);
  train->add_option("--seed", train_args.seed, "Clustering seed");
  train->add_option("--estimator", train_args.estimator, "gw or sog");
  train->add_option("--sog-p", train_args.sog_p, "Shades-of-gray exponent")->check(CLI::Range(1.0, 1e6));
  train->add_flag("--linearize", train_args.linearize, "Estimate casts on linearized images");
  train->add_flag("--mask-saturated", train_args.mask_saturated, "Ignore near-saturated pixels");
  train->add_option("--max-samples", train_args.max_samples, "Pixels sampled per pair")
      ->check(CLI::Range(33, 1 << 30));
  train->add_option("--out", train_args.out, "Model file to write")->required();

  CorrectArgs correct_args;
  auto* correct_cmd = app.add_subcommand("correct", "Correct one image");
  correct_cmd->add_option("--model", correct_args.model, "Model file")->envname("WBRF_MODEL");
  correct_cmd->add_option("--in", correct_args.in, "Input image (PNG or PPM)")->required();
  correct_cmd->add_option("--out", correct_args.out, "Output image (.png or .ppm)")->required();
  auto* auto_flag = correct_cmd->add_flag("--auto", correct_args.auto_mode, "Estimate the cast");
  auto* pixel_opt = correct_cmd->add_option("--pixel", correct_args.pixel, "Achromatic pixel X,Y");
  auto* color_opt = correct_cmd->add_option("--color", correct_args.color, "Cast color R,G,B in [0,1]");
  auto_flag->excludes(pixel_opt)->excludes(color_opt);
  pixel_opt->excludes(color_opt);
  correct_cmd->add_flag("--baseline-diagonal", correct_args.baseline_diagonal,
                        "Apply the diagonal correction instead of the model");
  correct_cmd->add_option("--estimator", correct_args.estimator, "Override the auto estimator (gw|sog)");
  correct_cmd->add_option("--sog-p", correct_args.sog_p, "Shades-of-gray exponent");
  correct_cmd->add_flag("--single-pixel", correct_args.single_pixel,
                        "Read only the clicked pixel instead of its 3x3 mean");
  correct_cmd->add_flag("--strict", correct_args.strict, "Reject near-black casts instead of clamping");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Report MSE/MAE/DeltaE2000 per method");
  evaluate->add_option("--model", eval_args.models, "Model file(s); each serves rf-<its estimator>")
      ->envname("WBRF_MODEL");
  auto* edata = evaluate->add_option("--data", eval_args.data, "Paired dataset directory");
  auto* esynth = evaluate->add_option("--synth", eval_args.synth,
                                      "Corpus manifest (test split), or 'default'");
  edata->excludes(esynth);
  evaluate->add_option("--gt-suffix", eval_args.gt_suffix, "Ground-truth suffix for flat layouts");
  evaluate->add_option("--methods", eval_args.methods, "Comma-separated: " + valid_method_names());
  evaluate->add_option("--sog-p", eval_args.sog_p, "Shades-of-gray exponent for diag-sog*");
  evaluate->add_option("--json", eval_args.json, "Also write the report as JSON");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write the synthetic corpus or its manifest");
  synth->add_option("--manifest", synth_args.manifest, "Manifest to render, or 'default'");
  synth->add_option("--out", synth_args.out, "Directory for {train,test}/{input,gt}/ PNGs");
  synth->add_option("--write-manifest", synth_args.write_manifest, "Write the manifest JSON here");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the interactive correction service");
  serve->add_option("--model", serve_args.model, "Model file")->envname("WBRF_MODEL")->required();
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--static", serve_args.static_dir, "UI bundle directory served at /");
  serve->add_option("--capacity", serve_args.capacity, "Sessions kept in memory");
  serve->add_option("--max-pixels", serve_args.max_pixels, "Largest accepted upload in pixels");
  serve->add_flag("--single-pixel", serve_args.single_pixel, "Picks read exactly one pixel");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (train_args.data.empty() && train_args.synth.empty()) {
        throw Error(ErrorCode::InvalidArgument, "train needs --data or --synth");
      }
      return cmd_train(train_args);
    }
    if (correct_cmd->parsed()) return cmd_correct(correct_args);
    if (evaluate->parsed()) {
      if (eval_args.data.empty() && eval_args.synth.empty()) {
        throw Error(ErrorCode::InvalidArgument, "evaluate needs --data or --synth");
      }
      return cmd_evaluate(eval_args);
    }
    if (synth->parsed()) return cmd_synth(synth_args);
    if (serve->parsed()) return cmd_serve(serve_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wbrf: %s\n", e.what());
    return 1;
  }
  return 1;
}
