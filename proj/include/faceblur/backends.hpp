#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faceblur/dataset.hpp"
#include "faceblur/geometry.hpp"
#include "faceblur/image.hpp"
#include "faceblur/imaging.hpp"

namespace faceblur {

/// What a backend knows about the frame besides its pixels. The original
/// dimensions are those of the frame the annotations refer to; they differ
/// from the image a blur network sees, which is the downsampled frame.
/// Zero means "same as the image".
struct frame_context {
  std::string id;
  std::size_t original_width = 0;
  std::size_t original_height = 0;

  static frame_context of(const image& img, std::string id = {}) {
    return {std::move(id), img.width(), img.height()};
  }
};

/// Face detector contract. Implementations are immutable after construction
/// and safe to call concurrently.
class detector_backend {
 public:
  virtual ~detector_backend() = default;
  virtual std::vector<face_box> detect(const image& img, const frame_context& ctx) const = 0;
  virtual std::string name() const = 0;
};

/// Image-to-image blur network contract: the output has the input's shape.
class blurnet_backend {
 public:
  virtual ~blurnet_backend() = default;
  virtual image forward(const image& img, const frame_context& ctx) const = 0;
  virtual std::string name() const = 0;
};

class unknown_frame : public error {
 public:
  using error::error;
};

/// Ground-truth faces keyed by frame identifier. Keys are annotation paths
/// with their file extension removed.
class oracle_annotations {
 public:
  oracle_annotations() = default;

  explicit oracle_annotations(const std::vector<annotated_frame>& frames) {
    for (const auto& f : frames) insert(f.path, f.faces);
  }

  void insert(std::string_view id, std::vector<face_annotation> faces) {
    auto& slot = faces_[normalize(id)];
    slot.insert(slot.end(), faces.begin(), faces.end());
  }

  std::size_t size() const noexcept { return faces_.size(); }

  /// Looks up by exact (extension-less) id, then by unique final path
  /// component. Throws unknown_frame otherwise.
  const std::vector<face_annotation>& resolve(std::string_view id) const {
    const std::string key = normalize(id);
    if (auto it = faces_.find(key); it != faces_.end()) return it->second;
    const std::string stem = last_component(key);
    const std::vector<face_annotation>* found = nullptr;
    for (const auto& [k, v] : faces_) {
      if (last_component(k) == stem) {
        if (found) throw unknown_frame("ambiguous frame id '" + std::string(id) + "'");
        found = &v;
      }
    }
    if (!found) throw unknown_frame("no annotations for frame '" + std::string(id) + "'");
    return *found;
  }

  static std::string normalize(std::string_view id) {
    std::string s(id);
    std::replace(s.begin(), s.end(), '\\', '/');
    const auto slash = s.find_last_of('/');
    const auto dot = s.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) s.erase(dot);
    while (s.starts_with("./")) s.erase(0, 2);
    return s;
  }

 private:
  static std::string last_component(const std::string& s) {
    const auto slash = s.find_last_of('/');
    return slash == std::string::npos ? s : s.substr(slash + 1);
  }

  std::map<std::string, std::vector<face_annotation>, std::less<>> faces_;
};

/// Replays stored faces as detections with confidence 1. Ellipses become
/// their axis-aligned bounding boxes; boxes pass through unchanged.
inline std::vector<face_box> oracle_detect(const oracle_annotations& annotations, std::string_view frame_id,
                                           const image& /*img*/) {
  std::vector<face_box> out;
  for (const auto& f : annotations.resolve(frame_id)) {
    face_box b = std::holds_alternative<face_box>(f) ? std::get<face_box>(f)
                                                     : ellipse_bounding_box(std::get<face_ellipse>(f));
    b.confidence = 1.0;
    out.push_back(std::move(b));
  }
  return out;
}

/// oracle_detect for an image that is a rescaled copy of the annotated frame
/// (original_width x original_height).
inline std::vector<face_box> oracle_detect(const oracle_annotations& annotations, std::string_view frame_id,
                                           const image& img, std::size_t original_width,
                                           std::size_t original_height) {
  if ((original_width == 0 || original_width == img.width()) &&
      (original_height == 0 || original_height == img.height()))
    return oracle_detect(annotations, frame_id, img);
  const double sx = original_width ? static_cast<double>(img.width()) / static_cast<double>(original_width) : 1.0;
  const double sy = original_height ? static_cast<double>(img.height()) / static_cast<double>(original_height) : 1.0;
  std::vector<face_box> out;
  for (const auto& f : annotations.resolve(frame_id)) {
    face_box b;
    if (const auto* box = std::get_if<face_box>(&f)) {
      b = face_box{box->x * sx, box->y * sy, box->w * sx, box->h * sy, {}, {}};
      for (const auto& p : box->landmarks) b.landmarks.push_back({p.x * sx, p.y * sy});
    } else {
      b = ellipse_bounding_box(scale_ellipse(std::get<face_ellipse>(f), sx, sy));
    }
    b.confidence = 1.0;
    out.push_back(std::move(b));
  }
  return out;
}

/// Simulates a perfectly trained blur network: applies the training-target
/// construction to its input, with the stored faces rescaled from the
/// original frame size to the input size.
inline image oracle_blurnet_forward(const oracle_annotations& annotations, std::string_view frame_id,
                                    const image& img, std::size_t original_width, std::size_t original_height,
                                    const sigma_rule& rule = {}) {
  const auto& stored = annotations.resolve(frame_id);
  const double sx = original_width ? static_cast<double>(img.width()) / static_cast<double>(original_width) : 1.0;
  const double sy = original_height ? static_cast<double>(img.height()) / static_cast<double>(original_height) : 1.0;
  std::vector<face_annotation> scaled;
  scaled.reserve(stored.size());
  for (const auto& f : stored) scaled.emplace_back(scale_ellipse(to_ellipse(f), sx, sy));
  return blur_faces(img, std::span<const face_annotation>(scaled), rule);
}

inline image oracle_blurnet_forward(const oracle_annotations& annotations, std::string_view frame_id,
                                    const image& img) {
  return oracle_blurnet_forward(annotations, frame_id, img, img.width(), img.height());
}

class oracle_detector final : public detector_backend {
 public:
  explicit oracle_detector(oracle_annotations annotations) : annotations_(std::move(annotations)) {}
  std::vector<face_box> detect(const image& img, const frame_context& ctx) const override {
    return oracle_detect(annotations_, ctx.id, img, ctx.original_width, ctx.original_height);
  }
  std::string name() const override { return "oracle"; }

 private:
  oracle_annotations annotations_;
};

class oracle_blurnet final : public blurnet_backend {
 public:
  explicit oracle_blurnet(oracle_annotations annotations, sigma_rule rule = {})
      : annotations_(std::move(annotations)), rule_(rule) {}
  image forward(const image& img, const frame_context& ctx) const override {
    const std::size_t ow = ctx.original_width ? ctx.original_width : img.width();
    const std::size_t oh = ctx.original_height ? ctx.original_height : img.height();
    return oracle_blurnet_forward(annotations_, ctx.id, img, ow, oh, rule_);
  }
  std::string name() const override { return "oracle"; }

 private:
  oracle_annotations annotations_;
  sigma_rule rule_;
};

/// Returns its input. Useful as a pass-through for pipeline plumbing checks.
class identity_blurnet final : public blurnet_backend {
 public:
  image forward(const image& img, const frame_context&) const override { return img; }
  std::string name() const override { return "identity"; }
};

// ---------------------------------------------------------------------------
// Detector output decoding, shared by the neural detector and its tests.

/// Aspect-preserving resize onto a square canvas with centered padding.
struct letterbox {
  double scale = 1.0;
  double pad_x = 0;
  double pad_y = 0;
  std::size_t canvas = 0;
  std::size_t resized_width = 0;
  std::size_t resized_height = 0;

  /// `input_size == 0` keeps the original resolution and pads to a square
  /// canvas whose side is a multiple of `stride`.
  static letterbox fit(std::size_t width, std::size_t height, std::size_t input_size, std::size_t stride = 32) {
    if (width == 0 || height == 0) throw error("letterbox: empty image");
    letterbox lb;
    if (input_size == 0) {
      const std::size_t side = std::max(width, height);
      lb.canvas = (side + stride - 1) / stride * stride;
      lb.scale = 1.0;
      lb.resized_width = width;
      lb.resized_height = height;
    } else {
      lb.canvas = input_size;
      lb.scale = std::min(static_cast<double>(input_size) / static_cast<double>(width),
                          static_cast<double>(input_size) / static_cast<double>(height));
      lb.resized_width = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(static_cast<double>(width) * lb.scale)), 1, input_size);
      lb.resized_height = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(static_cast<double>(height) * lb.scale)), 1, input_size);
    }
    lb.pad_x = std::floor(static_cast<double>(lb.canvas - lb.resized_width) / 2.0);
    lb.pad_y = std::floor(static_cast<double>(lb.canvas - lb.resized_height) / 2.0);
    return lb;
  }

  point to_original(double x, double y) const { return {(x - pad_x) / scale, (y - pad_y) / scale}; }
};

inline double iou(const face_box& a, const face_box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

/// Greedy non-maximum suppression. Boxes are visited by descending
/// confidence (ties keep input order); a box is dropped when its IoU with a
/// kept box exceeds `iou_threshold`.
inline std::vector<face_box> non_max_suppression(std::vector<face_box> boxes, double iou_threshold) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].confidence.value_or(0) > boxes[b].confidence.value_or(0);
  });
  std::vector<face_box> kept;
  for (std::size_t i : order) {
    bool keep = true;
    for (const auto& k : kept) {
      if (iou(boxes[i], k) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(std::move(boxes[i]));
  }
  return kept;
}

struct detection_params {
  double confidence_threshold = 0.5;
  double iou_threshold = 0.5;
};

/// Number of values per candidate row in the face detector output:
/// cx, cy, w, h, objectness, 5 landmark (x, y) pairs, class score.
inline constexpr std::size_t detector_row_size = 16;

/// Decodes raw detector rows (network-input coordinates) into face boxes in
/// original image coordinates, clipped to the image.
inline std::vector<face_box> decode_detections(std::span<const float> rows, const letterbox& lb,
                                               std::size_t width, std::size_t height,
                                               const detection_params& params = {}) {
  if (rows.size() % detector_row_size != 0)
    throw error("decode_detections: output length is not a multiple of " + std::to_string(detector_row_size));
  const double wmax = static_cast<double>(width);
  const double hmax = static_cast<double>(height);
  std::vector<face_box> candidates;
  for (std::size_t r = 0; r < rows.size() / detector_row_size; ++r) {
    const float* v = rows.data() + r * detector_row_size;
    const double score = std::clamp(static_cast<double>(v[4]) * static_cast<double>(v[15]), 0.0, 1.0);
    if (!(score >= params.confidence_threshold)) continue;
    const point p0 = lb.to_original(v[0] - v[2] / 2.0, v[1] - v[3] / 2.0);
    const point p1 = lb.to_original(v[0] + v[2] / 2.0, v[1] + v[3] / 2.0);
    const double x0 = std::clamp(p0.x, 0.0, wmax);
    const double y0 = std::clamp(p0.y, 0.0, hmax);
    const double x1 = std::clamp(p1.x, 0.0, wmax);
    const double y1 = std::clamp(p1.y, 0.0, hmax);
    face_box box{x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0), score, {}};
    for (int k = 0; k < 5; ++k) {
      const point q = lb.to_original(v[5 + 2 * k], v[6 + 2 * k]);
      box.landmarks.push_back({std::clamp(q.x, 0.0, wmax), std::clamp(q.y, 0.0, hmax)});
    }
    candidates.push_back(std::move(box));
  }
  return non_max_suppression(std::move(candidates), params.iou_threshold);
}

}  // namespace faceblur
