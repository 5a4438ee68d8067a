#pragma once

// Command-line front end: blur, build-dataset, bench, evaluate.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faceblur/bench.hpp"
#include "faceblur/dataset_io.hpp"
#include "faceblur/faceblur.hpp"
#include "faceblur/raster_io.hpp"
#ifdef FACEBLUR_HAVE_ONNX
#include "faceblur/neural.hpp"
#endif

namespace faceblur::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;
inline constexpr const char* model_dir_env = "FACEBLUR_MODEL_DIR";

enum class command { blur, build_dataset, bench, evaluate };

struct job_spec {
  command cmd = command::blur;
  int verbosity = 0;
  std::size_t workers = 1;

  // blur / bench
  fs::path input;
  fs::path output;
  pipeline_config pipeline;
  std::string backend;  // oracle | neural | identity
  std::optional<fs::path> annotations;
  corpus annotation_format = corpus::fddb;
  std::optional<fs::path> model;
  detection_params detection;

  // build-dataset
  std::optional<fs::path> fddb_dir;
  std::optional<fs::path> wider_dir;
  std::uint64_t seed = default_split_seed;

  // bench
  std::vector<inference_size> sizes;
  std::vector<bench_scenario> scenarios;
  std::size_t frame_count = 100;
  std::optional<fs::path> report;

  // evaluate
  fs::path inputs_dir;
  fs::path outputs_dir;
  double max_energy_ratio = 0.3;
};

struct parse_outcome {
  std::optional<job_spec> spec;
  int exit_code = exit_ok;
  std::string message;  // help or diagnostic text
};

namespace detail {

inline inference_size parse_size(const std::string& s) {
  if (s == "original") return std::nullopt;
  return static_cast<std::size_t>(std::stoul(s));
}

inline const std::vector<std::string> size_choices{"192", "256", "512", "original"};

struct raw_options {
  std::string mode = "direct";
  std::vector<std::string> sizes;
  std::vector<std::string> scenarios;
  std::string backend = "auto";
  std::string annotation_format = "fddb";
  std::string annotations;
  std::string model;
  std::string fddb;
  std::string wider;
  std::string report;
  int blur_verbosity = 0;   // one counter per subcommand: CLI11 resets
  int build_verbosity = 0;  // a shared flag target from unused subcommands
};

}  // namespace detail

/// Parses argv into a validated job. Never throws; usage problems come back
/// with exit code 2 and the diagnostic in `message`.
inline parse_outcome parse_args(int argc, const char* const* argv) {
  job_spec spec;
  detail::raw_options raw;
  CLI::App app{"Face anonymization: detector-driven and network-driven blurring, dataset pairs, benchmarks",
               "faceblur"};
  app.set_config("--config", "", "Read options from a TOML/INI file (flags on the command line win)");
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  const auto add_pipeline_flags = [&](CLI::App* sub) {
    sub->add_option("--mode", raw.mode, "direct (detector + ellipse blur) or indirect (blur network + L1 mask)")
        ->check(CLI::IsMember({"direct", "indirect"}))
        ->capture_default_str();
    sub->add_option("--threshold", spec.pipeline.threshold,
                    "Indirect mask threshold on the channel-averaged standardized |input - output|")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--sigma-scale", spec.pipeline.sigma.scale,
                    "Blur sigma = smallest face dimension / scale")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--sigma-min", spec.pipeline.sigma.sigma_min, "Lower clamp for the blur sigma (pixels)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--sigma-max", spec.pipeline.sigma.sigma_max, "Upper clamp for the blur sigma (pixels)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--backend", raw.backend,
                    "Model backend: oracle (replays --annotations), neural (ONNX --model), identity, or auto "
                    "(oracle when --annotations is given, else neural)")
        ->check(CLI::IsMember({"auto", "oracle", "neural", "identity"}))
        ->capture_default_str();
    auto* ann = sub->add_option("--annotations", raw.annotations, "Annotation file for the oracle backend")
                    ->check(CLI::ExistingFile);
    sub->add_option("--annotation-format", raw.annotation_format, "Annotation file format")
        ->check(CLI::IsMember({"fddb", "wider"}))
        ->capture_default_str();
    auto* model = sub->add_option("--model", raw.model,
                                  std::string("ONNX model file; defaults to $") + model_dir_env +
                                      "/detector.onnx or $" + model_dir_env + "/blurnet_<size>.onnx");
    model->excludes(ann);
    sub->add_option("--conf", spec.detection.confidence_threshold, "Detector confidence threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--iou", spec.detection.iou_threshold, "Detector NMS IoU threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  };

  auto* blur = app.add_subcommand("blur", "Anonymize an image or a directory of frames");
  blur->add_option("-i,--input", spec.input, "Image file or directory of frames")->required()->check(CLI::ExistingPath);
  blur->add_option("-o,--output", spec.output, "Output file (single image) or directory")->required();
  blur->add_option("--size", raw.sizes,
                   "Inference size: 192, 256, 512 or original (default: original for direct, 512 for indirect)")
      ->check(CLI::IsMember(detail::size_choices))
      ->expected(1);
  add_pipeline_flags(blur);
  blur->add_option("--workers", spec.workers, "Frames processed in parallel; output does not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  blur->add_flag("-v,--verbose", raw.blur_verbosity, "Print per-frame statistics");

  auto* build = app.add_subcommand("build-dataset", "Build (input, blurred target) training pairs");
  build->add_option("--fddb", raw.fddb, "FDDB root (fold files + originalPics)")->check(CLI::ExistingDirectory);
  build->add_option("--wider", raw.wider, "WIDER FACE root (wider_face_split + WIDER_train/WIDER_val)")
      ->check(CLI::ExistingDirectory);
  build->add_option("--out", spec.output, "Output directory")->required();
  build->add_option("--seed", spec.seed, "Seed of the FDDB train/val shuffle")->capture_default_str();
  build->add_option("--sigma-scale", spec.pipeline.sigma.scale, "Blur sigma = smallest face dimension / scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build->add_option("--sigma-min", spec.pipeline.sigma.sigma_min, "Lower clamp for the blur sigma")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build->add_option("--sigma-max", spec.pipeline.sigma.sigma_max, "Upper clamp for the blur sigma")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build->add_option("--workers", spec.workers, "Pairs generated in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build->add_flag("-v,--verbose", raw.build_verbosity, "Log skipped frames");

  auto* bench = app.add_subcommand("bench", "Measure frames per second");
  bench->add_option("--frames", spec.input, "Directory of source frames")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--size", raw.sizes, "Inference sizes (repeat or comma-separate for a grid)")
      ->check(CLI::IsMember(detail::size_choices))
      ->delimiter(',');
  bench->add_option("--scenario", raw.scenarios,
                    "preresized (frames already at the inference size), 1024 or 2048 (repeatable)")
      ->check(CLI::IsMember({"preresized", "1024", "2048"}))
      ->delimiter(',');
  bench->add_option("--count", spec.frame_count, "Frames timed per cell")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--report", raw.report, "Write the JSON report to this file");
  bench->add_option("--workers", spec.workers, "Parallel workers (reported separately from single-worker runs)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_pipeline_flags(bench);

  auto* eval = app.add_subcommand("evaluate", "Count correctly blurred faces");
  eval->add_option("--annotations", raw.annotations, "Annotation file (FDDB or WIDER format)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--format", raw.annotation_format, "Annotation file format")
      ->check(CLI::IsMember({"fddb", "wider"}))
      ->capture_default_str();
  eval->add_option("--inputs", spec.inputs_dir, "Directory of original images")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--outputs", spec.outputs_dir, "Directory of anonymized images")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--max-ratio", spec.max_energy_ratio,
                   "A face counts as blurred when its Laplacian energy drops to at most this fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  eval->add_option("--report", raw.report, "Write per-face results as JSON");

  parse_outcome outcome;
  try {
    if (argc <= 1) throw CLI::CallForHelp();
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    outcome.message = app.help();
    outcome.exit_code = argc <= 1 ? exit_usage : exit_ok;
    return outcome;
  } catch (const CLI::CallForAllHelp&) {
    outcome.message = app.help("", CLI::AppFormatMode::All);
    return outcome;
  } catch (const CLI::ParseError& e) {
    std::ostringstream os;
    os << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    os << (subs.empty() ? app.help() : subs.front()->help());
    outcome.message = os.str();
    outcome.exit_code = exit_usage;
    return outcome;
  }

  auto usage = [&](const std::string& msg) {
    outcome.message = "error: " + msg + "\n";
    outcome.exit_code = exit_usage;
    return outcome;
  };

  if (blur->parsed()) spec.cmd = command::blur;
  if (build->parsed()) spec.cmd = command::build_dataset;
  if (bench->parsed()) spec.cmd = command::bench;
  if (eval->parsed()) spec.cmd = command::evaluate;

  spec.verbosity = blur->parsed() ? raw.blur_verbosity : raw.build_verbosity;
  spec.pipeline.mode = raw.mode == "indirect" ? pipeline_mode::indirect : pipeline_mode::direct;
  spec.annotation_format = raw.annotation_format == "wider" ? corpus::wider : corpus::fddb;
  if (!raw.annotations.empty()) spec.annotations = raw.annotations;
  if (!raw.model.empty()) spec.model = raw.model;
  if (!raw.fddb.empty()) spec.fddb_dir = raw.fddb;
  if (!raw.wider.empty()) spec.wider_dir = raw.wider;
  if (!raw.report.empty()) spec.report = raw.report;
  spec.backend = raw.backend == "auto" ? (spec.annotations ? "oracle" : "neural") : raw.backend;
  spec.pipeline.backend = spec.backend;

  const inference_size default_size =
      spec.pipeline.mode == pipeline_mode::indirect ? inference_size{512} : inference_size{};
  for (const auto& s : raw.sizes) spec.sizes.push_back(detail::parse_size(s));
  if (spec.sizes.empty()) spec.sizes.push_back(default_size);
  spec.pipeline.size = spec.sizes.front();
  for (const auto& s : raw.scenarios) spec.scenarios.push_back(*parse_scenario(s));
  if (spec.scenarios.empty()) spec.scenarios.push_back(bench_scenario::preresized);

  if (spec.cmd == command::blur || spec.cmd == command::bench) {
    if (spec.backend == "oracle" && !spec.annotations) return usage("the oracle backend needs --annotations");
    if (spec.backend == "identity" && spec.pipeline.mode == pipeline_mode::direct)
      return usage("the identity backend is a blur-network stand-in; use it with --mode indirect");
    for (const auto& s : spec.sizes) {
      if (spec.pipeline.mode == pipeline_mode::indirect && !s)
        return usage("--mode indirect needs --size 192, 256 or 512");
    }
    if (!(spec.pipeline.sigma.sigma_min <= spec.pipeline.sigma.sigma_max))
      return usage("--sigma-min must not exceed --sigma-max");
  }
  if (spec.cmd == command::build_dataset) {
    if (!spec.fddb_dir && !spec.wider_dir) return usage("build-dataset needs --fddb and/or --wider");
    if (!(spec.pipeline.sigma.sigma_min <= spec.pipeline.sigma.sigma_max))
      return usage("--sigma-min must not exceed --sigma-max");
  }
  outcome.spec = std::move(spec);
  return outcome;
}

// ---------------------------------------------------------------------------

/// Serializes whole lines from concurrent workers.
class line_logger {
 public:
  explicit line_logger(std::ostream& os) : os_(os) {}
  void line(const std::string& s) {
    std::lock_guard lock(mu_);
    os_ << s << '\n' << std::flush;
  }

 private:
  std::ostream& os_;
  std::mutex mu_;
};

struct frame_file {
  fs::path path;
  std::string id;  // relative path without extension
  fs::path relative;
};

/// Raster files of a directory (recursive), sorted by relative path, or the
/// single file itself.
inline std::vector<frame_file> list_frames(const fs::path& input) {
  std::vector<frame_file> out;
  if (fs::is_regular_file(input)) {
    out.push_back({input, input.stem().string(), input.filename()});
    return out;
  }
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (!e.is_regular_file() || !is_raster_file(e.path())) continue;
    const fs::path rel = fs::relative(e.path(), input);
    fs::path id = rel;
    id.replace_extension();
    out.push_back({e.path(), id.generic_string(), rel});
  }
  std::sort(out.begin(), out.end(),
            [](const frame_file& a, const frame_file& b) { return a.relative.generic_string() < b.relative.generic_string(); });
  return out;
}

class directory_source {
 public:
  explicit directory_source(std::vector<frame_file> files) : files_(std::move(files)) {}
  std::optional<source_item> next() {
    if (pos_ >= files_.size()) return std::nullopt;
    const frame_file& f = files_[pos_++];
    return source_item{f.id, [path = f.path] { return read_image(path); }};
  }

 private:
  std::vector<frame_file> files_;
  std::size_t pos_ = 0;
};

/// Writes frame k to its destination path as PNG.
class directory_sink {
 public:
  explicit directory_sink(std::vector<fs::path> destinations) : dest_(std::move(destinations)) {}
  void write(std::size_t index, const std::string&, const image& img) {
    const fs::path& p = dest_.at(index);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_png(p, img);
  }

 private:
  std::vector<fs::path> dest_;
};

class runtime_failure : public error {
 public:
  using error::error;
};

inline fs::path resolve_model(const job_spec& spec, const std::string& default_name) {
  if (spec.model) return *spec.model;
  const char* env = std::getenv(model_dir_env);
  const fs::path dir = env && *env ? fs::path(env) : fs::path("models");
  return dir / default_name;
}

inline std::unique_ptr<detector_backend> make_detector(const job_spec& spec, inference_size size) {
  if (spec.backend == "oracle")
    return std::make_unique<oracle_detector>(oracle_annotations(load_annotations(*spec.annotations, spec.annotation_format)));
  const fs::path model = resolve_model(spec, "detector.onnx");
#ifdef FACEBLUR_HAVE_ONNX
  if (!fs::is_regular_file(model))
    throw runtime_failure("missing detector model: expected the ONNX interchange file " + model.string() +
                          " (pass --model or set " + model_dir_env + ")");
  return std::make_unique<onnx_detector>(model, size.value_or(0), spec.detection);
#else
  (void)size;
  throw runtime_failure("this build has no ONNX support; cannot load " + model.string());
#endif
}

inline std::unique_ptr<blurnet_backend> make_blurnet(const job_spec& spec, inference_size size) {
  if (spec.backend == "oracle")
    return std::make_unique<oracle_blurnet>(oracle_annotations(load_annotations(*spec.annotations, spec.annotation_format)),
                                            spec.pipeline.sigma);
  if (spec.backend == "identity") return std::make_unique<identity_blurnet>();
  const fs::path model = resolve_model(spec, "blurnet_" + to_string(size) + ".onnx");
#ifdef FACEBLUR_HAVE_ONNX
  if (!fs::is_regular_file(model))
    throw runtime_failure("missing blur network model: expected the ONNX interchange file " + model.string() +
                          " (pass --model or set " + model_dir_env + ")");
  return std::make_unique<onnx_blurnet>(model);
#else
  throw runtime_failure("this build has no ONNX support; cannot load " + model.string());
#endif
}

/// Frame function for the configured pipeline. `log` receives per-frame
/// statistics when non-null.
inline frame_function make_frame_function(const job_spec& spec, const pipeline_config& cfg,
                                          std::shared_ptr<const detector_backend> detector,
                                          std::shared_ptr<const blurnet_backend> blurnet, line_logger* log) {
  if (cfg.mode == pipeline_mode::direct) {
    return [cfg, detector, log](const image& frame, const frame_context& ctx) {
      auto r = run_direct(frame, *detector, cfg, ctx);
      if (log) {
        std::ostringstream os;
        os << ctx.id << ": faces=" << r.detections.size() << " masked_pixels=" << r.mask.count();
        if (r.sigma) os << " sigma=" << *r.sigma;
        log->line(os.str());
      }
      return std::move(r.output);
    };
  }
  (void)spec;
  return [cfg, blurnet, log](const image& frame, const frame_context& ctx) {
    auto r = run_indirect(frame, *blurnet, cfg, ctx);
    if (log) {
      std::ostringstream os;
      os << ctx.id << ": masked_pixels=" << r.mask.count() << " (at " << to_string(cfg.size) << ": "
         << r.small_mask.count() << ")";
      log->line(os.str());
    }
    return std::move(r.output);
  };
}

inline int run_blur(const job_spec& spec, std::ostream& out, std::ostream& err) {
  spec.pipeline.validate();
  std::shared_ptr<const detector_backend> detector;
  std::shared_ptr<const blurnet_backend> blurnet;
  if (spec.pipeline.mode == pipeline_mode::direct) detector = make_detector(spec, spec.pipeline.size);
  else blurnet = make_blurnet(spec, spec.pipeline.size);

  const auto files = list_frames(spec.input);
  std::vector<fs::path> dest;
  const bool single = fs::is_regular_file(spec.input);
  for (const auto& f : files) {
    if (single && !fs::is_directory(spec.output)) {
      dest.push_back(spec.output);
    } else {
      fs::path p = spec.output / f.relative;
      p.replace_extension(".png");
      dest.push_back(p);
    }
  }

  line_logger log(out);
  line_logger errlog(err);
  auto fn = make_frame_function(spec, spec.pipeline, detector, blurnet, spec.verbosity >= 1 ? &log : nullptr);
  directory_source source(files);
  directory_sink sink(dest);
  const auto report = process_sequence(source, sink, fn, spec.workers, [&](const frame_failure& f) {
    errlog.line("frame " + std::to_string(f.index) + " (" + f.id + ") failed: " + f.message);
  });
  if (spec.verbosity >= 1)
    log.line("processed " + std::to_string(report.processed) + " of " + std::to_string(files.size()) + " frames");
  return report.failures.empty() ? exit_ok : exit_failure;
}

inline int run_build_dataset(const job_spec& spec, std::ostream& out, std::ostream& err) {
  dataset_job job;
  job.fddb_dir = spec.fddb_dir;
  job.wider_dir = spec.wider_dir;
  job.out_dir = spec.output;
  job.seed = spec.seed;
  job.sigma = spec.pipeline.sigma;
  job.workers = spec.workers;
  line_logger errlog(err);
  const auto r = materialize_dataset(job, [&](const std::string& s) {
    if (spec.verbosity >= 1) errlog.line(s);
  });
  out << "pairs written: " << r.written << " (train " << r.manifest.train_count << ", val " << r.manifest.val_count
      << " assigned)\n";
  if (!r.failures.empty()) err << r.failures.size() << " frames skipped\n";
  return r.failures.empty() ? exit_ok : exit_failure;
}

inline int run_bench(const job_spec& spec, std::ostream& out, std::ostream&) {
  const auto files = list_frames(spec.input);
  std::vector<image> sources;
  std::vector<std::string> ids;
  for (const auto& f : files) {
    if (sources.size() >= spec.frame_count) break;
    sources.push_back(read_image(f.path));
    ids.push_back(f.id);
  }
  if (sources.size() < spec.frame_count)
    throw runtime_failure("bench needs " + std::to_string(spec.frame_count) + " frames in " + spec.input.string() +
                          ", found " + std::to_string(sources.size()));

  std::vector<bench_report> reports;
  for (auto scenario : spec.scenarios) {
    for (const auto& size : spec.sizes) {
      pipeline_config cfg = spec.pipeline;
      cfg.size = size;
      cfg.validate();
      std::shared_ptr<const detector_backend> detector;
      std::shared_ptr<const blurnet_backend> blurnet;
      if (cfg.mode == pipeline_mode::direct) detector = make_detector(spec, size);
      else blurnet = make_blurnet(spec, size);
      const auto frames = prepare_scenario_frames(sources, scenario, size);
      timed_frame_function fn;
      if (cfg.mode == pipeline_mode::direct) {
        fn = [&](const image& frame, std::size_t i, stage_timings& t) {
          frame_context ctx{ids[i], sources[i].width(), sources[i].height()};
          return run_direct(frame, *detector, cfg, ctx, &t).output;
        };
      } else {
        fn = [&](const image& frame, std::size_t i, stage_timings& t) {
          frame_context ctx{ids[i], sources[i].width(), sources[i].height()};
          return run_indirect(frame, *blurnet, cfg, ctx, &t).output;
        };
      }
      bench_report r = spec.workers > 1 ? measure_fps_parallel(fn, frames, spec.frame_count, spec.workers)
                                        : measure_fps(fn, frames, spec.frame_count);
      r.pipeline = std::string(to_string(cfg.mode));
      r.inference_size = to_string(size);
      r.scenario = scenario;
      reports.push_back(std::move(r));
    }
  }
  const auto formatted = emit_report(reports);
  out << formatted.table;
  if (spec.report) {
    std::ofstream f(*spec.report, std::ios::binary);
    if (!f) throw runtime_failure("cannot write " + spec.report->string());
    f << formatted.json;
  }
  return exit_ok;
}

inline int run_evaluate(const job_spec& spec, std::ostream& out, std::ostream& err) {
  const auto frames = load_annotations(*spec.annotations, spec.annotation_format);
  sharpness_criterion criterion;
  criterion.max_energy_ratio = spec.max_energy_ratio;
  std::size_t total = 0, blurred = 0, not_assessable = 0, missing = 0;
  nlohmann::ordered_json doc;
  doc["frames"] = nlohmann::ordered_json::array();
  for (const auto& frame : frames) {
    std::vector<face_ellipse> ellipses;
    for (const auto& f : frame.faces) ellipses.push_back(to_ellipse(f));
    try {
      const image in = read_image(locate_image(spec.inputs_dir, frame.path));
      fs::path out_path = spec.outputs_dir / frame.path;
      out_path.replace_extension(".png");
      if (!fs::is_regular_file(out_path)) out_path = locate_image(spec.outputs_dir, frame.path);
      const image result = read_image(out_path);
      const auto audit = count_blurred_faces(in, result, ellipses, criterion);
      total += audit.total;
      blurred += audit.blurred;
      not_assessable += audit.not_assessable;
      out << frame.path << ": " << audit.blurred << "/" << audit.total << " blurred";
      if (audit.not_assessable) out << " (" << audit.not_assessable << " not assessable)";
      out << "\n";
      nlohmann::ordered_json j;
      j["path"] = frame.path;
      j["faces"] = audit.total;
      j["blurred"] = audit.blurred;
      j["not_assessable"] = audit.not_assessable;
      j["energy_ratios"] = nlohmann::ordered_json::array();
      for (const auto& fr : audit.faces) j["energy_ratios"].push_back(fr.assessable ? nlohmann::ordered_json(fr.energy_ratio) : nlohmann::ordered_json());
      doc["frames"].push_back(std::move(j));
    } catch (const std::exception& e) {
      ++missing;
      err << frame.path << ": " << e.what() << "\n";
    }
  }
  out << "total: " << blurred << "/" << total << " blurred";
  if (not_assessable) out << ", " << not_assessable << " not assessable";
  out << "\n";
  doc["total"] = total;
  doc["blurred"] = blurred;
  doc["not_assessable"] = not_assessable;
  if (spec.report) std::ofstream(*spec.report, std::ios::binary) << doc.dump(2) << "\n";
  return missing ? exit_failure : exit_ok;
}

inline int run(const job_spec& spec, std::ostream& out, std::ostream& err) {
  try {
    switch (spec.cmd) {
      case command::blur: return run_blur(spec, out, err);
      case command::build_dataset: return run_build_dataset(spec, out, err);
      case command::bench: return run_bench(spec, out, err);
      case command::evaluate: return run_evaluate(spec, out, err);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return exit_failure;
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  auto parsed = parse_args(argc, argv);
  if (!parsed.spec) {
    (parsed.exit_code == exit_ok ? out : err) << parsed.message;
    return parsed.exit_code;
  }
  return run(*parsed.spec, out, err);
}

}  // namespace faceblur::cli
