#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "faceblur/geometry.hpp"
#include "faceblur/image.hpp"
#include "faceblur/imaging.hpp"
#include "faceblur/pipelines.hpp"

namespace faceblur {

/// Input-size scenario of a throughput run: frames already at the network
/// size, or 1024x1024 / 2048x2048 frames that go through the resize steps.
enum class bench_scenario { preresized, input_1024, input_2048 };

inline std::string_view to_string(bench_scenario s) {
  switch (s) {
    case bench_scenario::preresized: return "preresized";
    case bench_scenario::input_1024: return "1024";
    case bench_scenario::input_2048: return "2048";
  }
  return "?";
}

inline std::optional<bench_scenario> parse_scenario(std::string_view s) {
  if (s == "preresized") return bench_scenario::preresized;
  if (s == "1024") return bench_scenario::input_1024;
  if (s == "2048") return bench_scenario::input_2048;
  return std::nullopt;
}

struct bench_report {
  std::string pipeline;
  std::string inference_size;  // "192", "256", "512" or "original"
  bench_scenario scenario = bench_scenario::preresized;
  std::size_t frames = 0;
  double fps = 0;
  double mean_frame_ms = 0;
  std::vector<std::pair<std::string, double>> stage_ms;  // mean per frame
  std::size_t workers = 1;
};

/// Frame side used by a scenario. Pre-resized frames match the inference
/// size; with the original size they are left untouched (returns 0).
inline std::size_t scenario_side(bench_scenario s, inference_size size) {
  switch (s) {
    case bench_scenario::preresized: return size.value_or(0);
    case bench_scenario::input_1024: return 1024;
    case bench_scenario::input_2048: return 2048;
  }
  return 0;
}

/// Resizes the frames to the scenario's square side. Done once, outside timing.
inline std::vector<image> prepare_scenario_frames(const std::vector<image>& frames, bench_scenario s,
                                                  inference_size size) {
  const std::size_t side = scenario_side(s, size);
  std::vector<image> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(side ? resample(f, side, side) : f);
  return out;
}

using timed_frame_function = std::function<image(const image& frame, std::size_t index, stage_timings& t)>;

/// Runs `fn` on the first `count` frames and reports the mean throughput.
/// Frame 0 is run once more beforehand as an untimed warm-up.
inline bench_report measure_fps(const timed_frame_function& fn, const std::vector<image>& frames,
                                std::size_t count = 100) {
  if (count == 0) throw error("measure_fps: frame count must be positive");
  if (frames.size() < count)
    throw error("measure_fps: need " + std::to_string(count) + " frames, got " + std::to_string(frames.size()));
  {
    stage_timings warmup;
    (void)fn(frames[0], 0, warmup);
  }
  stage_timings timings;
  const auto start = stage_timings::clock::now();
  for (std::size_t i = 0; i < count; ++i) {
    const image out = fn(frames[i], i, timings);
    if (out.empty()) throw error("measure_fps: pipeline returned an empty frame");
  }
  const double total_ms =
      std::chrono::duration<double, std::milli>(stage_timings::clock::now() - start).count();
  bench_report r;
  r.frames = count;
  r.mean_frame_ms = total_ms / static_cast<double>(count);
  r.fps = total_ms > 0 ? 1000.0 * static_cast<double>(count) / total_ms
                       : std::numeric_limits<double>::infinity();
  timings.scale(1.0 / static_cast<double>(count));
  r.stage_ms = timings.stages();
  return r;
}

/// Throughput with `workers` threads pulling frames from a shared counter.
/// Stage times are summed over threads, so they describe per-frame cost, not
/// wall-clock share.
inline bench_report measure_fps_parallel(const timed_frame_function& fn, const std::vector<image>& frames,
                                         std::size_t count, std::size_t workers) {
  if (workers <= 1) return measure_fps(fn, frames, count);
  if (count == 0) throw error("measure_fps: frame count must be positive");
  if (frames.size() < count)
    throw error("measure_fps: need " + std::to_string(count) + " frames, got " + std::to_string(frames.size()));
  {
    stage_timings warmup;
    (void)fn(frames[0], 0, warmup);
  }
  std::vector<stage_timings> per_thread(workers);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  const auto start = stage_timings::clock::now();
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = next++; i < count; i = next++)
          if (fn(frames[i], i, per_thread[t]).empty()) failed = true;
      });
    }
  }
  const double total_ms =
      std::chrono::duration<double, std::milli>(stage_timings::clock::now() - start).count();
  if (failed) throw error("measure_fps: pipeline returned an empty frame");
  stage_timings timings;
  for (const auto& pt : per_thread)
    for (const auto& [name, ms] : pt.stages()) timings.add(name, std::chrono::duration_cast<stage_timings::clock::duration>(std::chrono::duration<double, std::milli>(ms)));
  bench_report r;
  r.frames = count;
  r.workers = workers;
  r.mean_frame_ms = total_ms / static_cast<double>(count);
  r.fps = total_ms > 0 ? 1000.0 * static_cast<double>(count) / total_ms
                       : std::numeric_limits<double>::infinity();
  timings.scale(1.0 / static_cast<double>(count));
  r.stage_ms = timings.stages();
  return r;
}

// ---------------------------------------------------------------------------
// Blurred-face audit.

struct sharpness_criterion {
  double max_energy_ratio = 0.3;
  std::size_t min_area = 4;
};

struct face_result {
  std::size_t region_pixels = 0;
  double energy_ratio = 0;  // output / input Laplacian energy
  bool modified = false;
  bool assessable = true;
  bool blurred = false;
};

struct face_audit {
  std::size_t total = 0;
  std::size_t blurred = 0;
  std::size_t not_assessable = 0;
  std::vector<face_result> faces;
};

namespace detail {

/// Channel-averaged 4-neighbor Laplacian with replicate borders.
inline std::vector<double> laplacian(const image& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  std::vector<double> luma(w * h, 0.0);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    const auto p = img.plane(c);
    for (std::size_t i = 0; i < luma.size(); ++i) luma[i] += p[i];
  }
  for (auto& v : luma) v /= static_cast<double>(img.channels());
  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t ym = y ? y - 1 : 0;
    const std::size_t yp = y + 1 < h ? y + 1 : y;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xm = x ? x - 1 : 0;
      const std::size_t xp = x + 1 < w ? x + 1 : x;
      out[y * w + x] = luma[y * w + xm] + luma[y * w + xp] + luma[ym * w + x] + luma[yp * w + x] -
                       4 * luma[y * w + x];
    }
  }
  return out;
}

/// Pixels of the mask whose 8 neighbors are all inside the mask.
inline binary_mask erode(const binary_mask& m) {
  binary_mask out(m.width(), m.height());
  if (m.width() < 3 || m.height() < 3) return out;
  for (std::size_t y = 1; y + 1 < m.height(); ++y)
    for (std::size_t x = 1; x + 1 < m.width(); ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy)
        for (int dx = -1; dx <= 1 && all; ++dx) all = m.test(x + dx, y + dy);
      if (all) out.set(x, y);
    }
  return out;
}

}  // namespace detail

/// Judges each annotated face as blurred when the processed face region lost
/// most of its high-frequency energy (sum of squared Laplacian responses over
/// the ellipse interior, eroded by one pixel so the sharp surroundings do not
/// leak in) and was actually modified.
inline face_audit count_blurred_faces(const image& input, const image& output,
                                      std::span<const face_ellipse> annotations,
                                      const sharpness_criterion& criterion = {}) {
  detail::require_same_shape(input, output, "count_blurred_faces");
  const auto lap_in = detail::laplacian(input);
  const auto lap_out = detail::laplacian(output);
  face_audit audit;
  audit.total = annotations.size();
  for (const auto& e : annotations) {
    face_result fr;
    const binary_mask region = rasterize_ellipse(e, input.width(), input.height());
    const binary_mask core = detail::erode(region);
    fr.region_pixels = region.count();
    for (std::size_t c = 0; c < input.channels() && !fr.modified; ++c) {
      const auto a = input.plane(c);
      const auto b = output.plane(c);
      for (std::size_t i = 0; i < region.size(); ++i)
        if (region[i] && a[i] != b[i]) {
          fr.modified = true;
          break;
        }
    }
    if (core.count() < criterion.min_area) {
      fr.assessable = false;
      ++audit.not_assessable;
      audit.faces.push_back(fr);
      continue;
    }
    double e_in = 0;
    double e_out = 0;
    for (std::size_t i = 0; i < core.size(); ++i) {
      if (!core[i]) continue;
      e_in += lap_in[i] * lap_in[i];
      e_out += lap_out[i] * lap_out[i];
    }
    fr.energy_ratio = e_in > 0 ? e_out / e_in : (e_out > 0 ? std::numeric_limits<double>::infinity() : 1.0);
    fr.blurred = fr.modified && fr.energy_ratio <= criterion.max_energy_ratio;
    if (fr.blurred) ++audit.blurred;
    audit.faces.push_back(fr);
  }
  return audit;
}

// ---------------------------------------------------------------------------
// Reports.

struct formatted_report {
  std::string json;
  std::string table;
};

inline std::string_view scenario_row_label(bench_scenario s) {
  switch (s) {
    case bench_scenario::preresized: return "No resizing needed";
    case bench_scenario::input_1024: return "Input size of 1024x1024";
    case bench_scenario::input_2048: return "Input size of 2048x2048";
  }
  return "?";
}

namespace detail {

inline int size_order(const std::string& s) {
  if (s == "original") return 1 << 20;
  try {
    return std::stoi(s);
  } catch (...) {
    return 1 << 21;
  }
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Structured JSON plus an aligned text table: one row per scenario, one
/// column per inference size, one table per pipeline. Missing cells are blank.
inline formatted_report emit_report(const std::vector<bench_report>& reports) {
  if (reports.empty()) throw error("emit_report: no reports");
  formatted_report out;

  nlohmann::ordered_json doc;
  doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["pipeline"] = r.pipeline;
    j["inference_size"] = r.inference_size;
    j["scenario"] = to_string(r.scenario);
    j["frames"] = r.frames;
    j["workers"] = r.workers;
    j["fps"] = r.fps;
    j["mean_frame_ms"] = r.mean_frame_ms;
    j["stage_ms"] = nlohmann::ordered_json::object();
    for (const auto& [stage, ms] : r.stage_ms) j["stage_ms"][stage] = ms;
    doc["reports"].push_back(std::move(j));
  }
  out.json = doc.dump(2) + "\n";

  std::vector<std::string> pipelines;
  for (const auto& r : reports)
    if (std::find(pipelines.begin(), pipelines.end(), r.pipeline) == pipelines.end()) pipelines.push_back(r.pipeline);

  for (const auto& p : pipelines) {
    std::vector<std::string> sizes;
    std::vector<bench_scenario> scenarios;
    std::map<std::pair<int, std::string>, double> cells;
    for (const auto& r : reports) {
      if (r.pipeline != p) continue;
      if (std::find(sizes.begin(), sizes.end(), r.inference_size) == sizes.end()) sizes.push_back(r.inference_size);
      if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) scenarios.push_back(r.scenario);
      cells[{static_cast<int>(r.scenario), r.inference_size}] = r.fps;
    }
    std::sort(sizes.begin(), sizes.end(),
              [](const std::string& a, const std::string& b) { return detail::size_order(a) < detail::size_order(b); });
    std::sort(scenarios.begin(), scenarios.end());

    std::vector<std::string> header{p};
    for (const auto& s : sizes) header.push_back(s == "original" ? s : s + "x" + s);
    std::vector<std::vector<std::string>> rows{header};
    for (auto sc : scenarios) {
      std::vector<std::string> row{std::string(scenario_row_label(sc))};
      for (const auto& s : sizes) {
        auto it = cells.find({static_cast<int>(sc), s});
        row.push_back(it == cells.end() ? std::string() : detail::fixed(it->second, 1));
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows)
      for (std::size_t k = 0; k < row.size(); ++k) widths[k] = std::max(widths[k], row[k].size());
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
      std::string line;
      for (std::size_t k = 0; k < rows[ri].size(); ++k) {
        const auto& cell = rows[ri][k];
        const std::string pad(widths[k] - cell.size(), ' ');
        line += k == 0 ? cell + pad : " | " + pad + cell;
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out.table += line + "\n";
      if (ri == 0) {
        std::string rule;
        for (std::size_t k = 0; k < widths.size(); ++k) rule += (k ? "-+-" : "") + std::string(widths[k], '-');
        out.table += rule + "\n";
      }
    }
    out.table += "\n";
  }
  return out;
}

}  // namespace faceblur
