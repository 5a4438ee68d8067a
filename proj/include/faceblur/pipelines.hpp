#pragma once

#include <chrono>
#include <condition_variable>
#include <concepts>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "faceblur/backends.hpp"
#include "faceblur/geometry.hpp"
#include "faceblur/imaging.hpp"

namespace faceblur {

enum class pipeline_mode { direct, indirect };

inline std::string_view to_string(pipeline_mode m) { return m == pipeline_mode::direct ? "direct" : "indirect"; }

/// Square side the frame is brought to before model inference. nullopt keeps
/// the original resolution (direct pipeline only).
using inference_size = std::optional<std::size_t>;

inline bool is_valid_inference_size(inference_size s) { return !s || *s == 192 || *s == 256 || *s == 512; }

inline std::string to_string(inference_size s) { return s ? std::to_string(*s) : std::string("original"); }

struct pipeline_config {
  pipeline_mode mode = pipeline_mode::direct;
  inference_size size;
  double threshold = 0.1;
  sigma_rule sigma;
  std::string backend = "oracle";

  void validate() const {
    if (!is_valid_inference_size(size)) throw error("inference size must be 192, 256, 512 or original");
    if (mode == pipeline_mode::indirect && !size)
      throw error("the indirect pipeline needs a square inference size (192, 256 or 512)");
    if (!(threshold >= 0)) throw error("threshold must be non-negative");
    sigma.validate();
  }
};

/// Wall-clock time per named stage, in milliseconds, accumulated across calls.
class stage_timings {
 public:
  using clock = std::chrono::steady_clock;

  void add(const std::string& stage, clock::duration d) {
    auto it = std::find_if(stages_.begin(), stages_.end(), [&](const auto& s) { return s.first == stage; });
    const double ms = std::chrono::duration<double, std::milli>(d).count();
    if (it == stages_.end()) stages_.emplace_back(stage, ms);
    else it->second += ms;
  }

  const std::vector<std::pair<std::string, double>>& stages() const noexcept { return stages_; }

  double total_ms() const {
    double t = 0;
    for (const auto& s : stages_) t += s.second;
    return t;
  }

  void scale(double factor) {
    for (auto& s : stages_) s.second *= factor;
  }

 private:
  std::vector<std::pair<std::string, double>> stages_;  // first-use order
};

namespace detail {

/// Records elapsed time since the previous mark into the named stage.
class stage_clock {
 public:
  explicit stage_clock(stage_timings* sink) : sink_(sink) {
    if (sink_) last_ = stage_timings::clock::now();
  }
  void mark(const char* stage) {
    if (!sink_) return;
    const auto now = stage_timings::clock::now();
    sink_->add(stage, now - last_);
    last_ = now;
  }

 private:
  stage_timings* sink_;
  stage_timings::clock::time_point last_;
};

}  // namespace detail

struct direct_result {
  image output;
  binary_mask mask;
  std::vector<face_box> detections;
  std::optional<double> sigma;  // unset when nothing was blurred
};

/// Detector-driven anonymization: detect, turn boxes into axis-aligned
/// ellipses, blur the whole frame once with a sigma picked from the smallest
/// face, and paste the blurred pixels under the union mask.
inline direct_result run_direct(const image& frame, const detector_backend& detector, const pipeline_config& cfg,
                                const frame_context& ctx, stage_timings* timings = nullptr) {
  if (frame.empty()) throw error("direct pipeline: empty frame");
  detail::stage_clock clock(timings);
  direct_result r;
  r.detections = detector.detect(frame, ctx);
  clock.mark("detect");

  std::vector<face_annotation> faces;
  for (const auto& b : r.detections)
    if (b.w > 0 && b.h > 0) faces.emplace_back(b);
  r.mask = face_mask(faces, frame.width(), frame.height());
  clock.mark("mask");
  if (faces.empty() || r.mask.none()) {
    r.output = frame;
    return r;
  }

  r.sigma = select_sigma(std::span<const face_annotation>(faces), cfg.sigma);
  const image blurred = gaussian_blur(frame, *r.sigma);
  clock.mark("blur");
  r.output = composite(frame, blurred, r.mask);
  clock.mark("composite");
  return r;
}

inline image direct_pipeline(const image& frame, const detector_backend& detector, const pipeline_config& cfg,
                             const frame_context& ctx) {
  return run_direct(frame, detector, cfg, ctx).output;
}

struct indirect_result {
  image output;
  binary_mask small_mask;  // at the inference size
  binary_mask mask;        // at the frame size
};

/// Network-driven anonymization in seven steps: downsample to DxD, forward,
/// upsample the network output, threshold |input - output| at DxD, upsample
/// the mask, cut the blurred faces out of the upsampled output, and paste
/// them into the full-resolution frame. Steps whose resampling is a no-op
/// (frame already DxD) cost nothing.
inline indirect_result run_indirect(const image& frame, const blurnet_backend& blurnet, const pipeline_config& cfg,
                                    const frame_context& ctx, stage_timings* timings = nullptr) {
  if (frame.empty()) throw error("indirect pipeline: empty frame");
  if (!cfg.size) throw error("indirect pipeline: inference size required");
  const std::size_t d = *cfg.size;
  const std::size_t w = frame.width();
  const std::size_t h = frame.height();
  const bool same = (w == d && h == d);
  frame_context fctx = ctx;
  if (fctx.original_width == 0) fctx.original_width = w;
  if (fctx.original_height == 0) fctx.original_height = h;

  detail::stage_clock clock(timings);
  indirect_result r;
  const image small = same ? frame : resample(frame, d, d);
  clock.mark("downsample");

  const image net_out = blurnet.forward(small, fctx);
  if (!net_out.same_shape(small)) throw error("blur network returned an image of the wrong shape");
  clock.mark("forward");

  r.small_mask = abs_diff_mask(small, net_out, cfg.threshold);
  clock.mark("threshold");
  if (r.small_mask.none()) {
    r.mask = binary_mask(w, h);
    r.output = frame;
    return r;
  }

  const image upsampled = same ? net_out : resample(net_out, w, h);
  clock.mark("upsample");
  r.mask = same ? r.small_mask : resample_mask(r.small_mask, w, h);
  clock.mark("mask_upsample");
  const image faces_only = composite(image(w, h, frame.channels()), upsampled, r.mask);
  clock.mark("extract");
  r.output = composite(frame, faces_only, r.mask);
  clock.mark("replace");
  return r;
}

inline image indirect_pipeline(const image& frame, const blurnet_backend& blurnet, const pipeline_config& cfg,
                               const frame_context& ctx) {
  return run_indirect(frame, blurnet, cfg, ctx).output;
}

// ---------------------------------------------------------------------------
// Frame sequences.

/// One frame announced by a source. Loading is deferred so a corrupt frame
/// fails in isolation.
struct source_item {
  std::string id;
  std::function<image()> load;
};

template <class S>
concept frame_source = requires(S s) {
  { s.next() } -> std::same_as<std::optional<source_item>>;
};

template <class S>
concept frame_sink = requires(S s, std::size_t i, const std::string& id, const image& img) {
  s.write(i, id, img);
};

struct frame_failure {
  std::size_t index;
  std::string id;
  std::string message;
};

struct sequence_report {
  std::size_t processed = 0;
  std::vector<frame_failure> failures;
};

using frame_function = std::function<image(const image&, const frame_context&)>;

/// Runs `fn` on every frame of the source and hands results to the sink in
/// source order. Frames are independent; with workers > 1 they are processed
/// concurrently and reordered before reaching the sink. A frame that fails to
/// load or process is reported and skipped.
template <frame_source Source, frame_sink Sink>
sequence_report process_sequence(Source& source, Sink& sink, const frame_function& fn, std::size_t workers = 1,
                                 const std::function<void(const frame_failure&)>& on_failure = {}) {
  sequence_report report;
  std::mutex mu;
  std::size_t next_index = 0;
  std::size_t next_flush = 0;
  std::map<std::size_t, std::pair<std::string, std::optional<image>>> pending;

  auto flush_locked = [&] {
    for (auto it = pending.find(next_flush); it != pending.end(); it = pending.find(next_flush)) {
      if (it->second.second) {
        try {
          sink.write(next_flush, it->second.first, *it->second.second);
          ++report.processed;
        } catch (const std::exception& e) {
          frame_failure f{next_flush, it->second.first, e.what()};
          if (on_failure) on_failure(f);
          report.failures.push_back(std::move(f));
        }
      }
      pending.erase(it);
      ++next_flush;
    }
  };

  auto work = [&] {
    for (;;) {
      std::optional<source_item> item;
      std::size_t index = 0;
      {
        std::lock_guard lock(mu);
        item = source.next();
        if (!item) return;
        index = next_index++;
      }
      std::optional<image> result;
      std::string message;
      try {
        const image frame = item->load();
        result = fn(frame, frame_context::of(frame, item->id));
      } catch (const std::exception& e) {
        message = e.what();
      }
      std::lock_guard lock(mu);
      if (!result) {
        frame_failure f{index, item->id, message};
        if (on_failure) on_failure(f);
        report.failures.push_back(std::move(f));
      }
      pending.emplace(index, std::make_pair(item->id, std::move(result)));
      flush_locked();
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  std::sort(report.failures.begin(), report.failures.end(),
            [](const frame_failure& a, const frame_failure& b) { return a.index < b.index; });
  return report;
}

/// In-memory source over a vector of frames, ids "0", "1", ...
class vector_source {
 public:
  explicit vector_source(std::vector<image> frames, std::vector<std::string> ids = {})
      : frames_(std::move(frames)), ids_(std::move(ids)) {}
  std::optional<source_item> next() {
    if (pos_ >= frames_.size()) return std::nullopt;
    const std::size_t i = pos_++;
    std::string id = i < ids_.size() ? ids_[i] : std::to_string(i);
    return source_item{std::move(id), [this, i] { return frames_[i]; }};
  }

 private:
  std::vector<image> frames_;
  std::vector<std::string> ids_;
  std::size_t pos_ = 0;
};

class vector_sink {
 public:
  void write(std::size_t, const std::string& id, const image& img) {
    ids.push_back(id);
    frames.push_back(img);
  }
  std::vector<std::string> ids;
  std::vector<image> frames;
};

}  // namespace faceblur
