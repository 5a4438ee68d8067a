#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "faceblur/image.hpp"

namespace faceblur {

struct point {
  double x = 0;
  double y = 0;
  friend bool operator==(const point&, const point&) = default;
};

/// Rotated ellipse annotation in FDDB parameterization. `ra` is the radius
/// along the direction `theta` (radians, measured from the +x axis in pixel
/// coordinates), `rb` the radius perpendicular to it.
struct face_ellipse {
  double ra = 0;
  double rb = 0;
  double theta = 0;
  double cx = 0;
  double cy = 0;
  friend bool operator==(const face_ellipse&, const face_ellipse&) = default;
};

/// Axis-aligned face box. Landmarks are either absent or exactly five points
/// (eyes, nose, mouth corners); nothing downstream consumes them.
struct face_box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  std::optional<double> confidence;
  std::vector<point> landmarks;
  friend bool operator==(const face_box&, const face_box&) = default;
};

using face_annotation = std::variant<face_ellipse, face_box>;

inline face_ellipse box_to_ellipse(const face_box& box) {
  return {box.w / 2, box.h / 2, 0.0, box.x + box.w / 2, box.y + box.h / 2};
}

inline face_ellipse to_ellipse(const face_annotation& face) {
  if (const auto* e = std::get_if<face_ellipse>(&face)) return *e;
  return box_to_ellipse(std::get<face_box>(face));
}

/// Half extents of the axis-aligned box enclosing the rotated ellipse.
inline point ellipse_half_extents(const face_ellipse& e) {
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  return {std::sqrt(e.ra * e.ra * c * c + e.rb * e.rb * s * s),
          std::sqrt(e.ra * e.ra * s * s + e.rb * e.rb * c * c)};
}

/// Axis-aligned bounding box of an ellipse. For theta = 0 this is the exact
/// inverse of box_to_ellipse.
inline face_box ellipse_bounding_box(const face_ellipse& e) {
  if (e.theta == 0.0) return {e.cx - e.ra, e.cy - e.rb, 2 * e.ra, 2 * e.rb, {}, {}};
  const point half = ellipse_half_extents(e);
  return {e.cx - half.x, e.cy - half.y, 2 * half.x, 2 * half.y, {}, {}};
}

/// Smallest face dimension used to pick the blur strength.
inline double face_min_dimension(const face_box& b) { return std::min(b.w, b.h); }
inline double face_min_dimension(const face_ellipse& e) { return 2 * std::min(e.ra, e.rb); }
inline double face_min_dimension(const face_annotation& f) {
  return std::visit([](const auto& v) { return face_min_dimension(v); }, f);
}

inline bool has_positive_area(const face_annotation& f) { return face_min_dimension(f) > 0; }

/// Membership of a point in the closed ellipse. Degenerate ellipses contain nothing.
inline bool ellipse_contains(const face_ellipse& e, double px, double py) {
  if (!(e.ra > 0) || !(e.rb > 0)) return false;
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  const double dx0 = px - e.cx;
  const double dy0 = py - e.cy;
  const double u = (c * dx0 + s * dy0) / e.ra;
  const double v = (-s * dx0 + c * dy0) / e.rb;
  return u * u + v * v <= 1.0;
}

/// Image of the ellipse under the scaling (x, y) -> (sx * x, sy * y).
/// Scaling is exact for axis-aligned ellipses; rotated ellipses go through the
/// eigen decomposition of the transformed quadratic form, and `ra` stays
/// attached to the axis that `ra` was attached to before scaling.
inline face_ellipse scale_ellipse(const face_ellipse& e, double sx, double sy) {
  face_ellipse out{e.ra, e.rb, e.theta, e.cx * sx, e.cy * sy};
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  if (e.theta == 0.0 || sx == sy) {
    out.ra = e.ra * sx;
    out.rb = e.rb * (e.theta == 0.0 ? sy : sx);
    return out;
  }
  if (!(e.ra > 0) || !(e.rb > 0)) {
    // degenerate: keep it degenerate, scale the surviving radius along its direction
    out.ra = e.ra * std::hypot(c * sx, s * sy);
    out.rb = e.rb * std::hypot(s * sx, c * sy);
    out.theta = std::atan2(s * sy, c * sx);
    return out;
  }
  // Quadratic form Q = R diag(1/ra^2, 1/rb^2) R^T, then Q' = S^-1 Q S^-1.
  const double ia = 1.0 / (e.ra * e.ra);
  const double ib = 1.0 / (e.rb * e.rb);
  double q11 = c * c * ia + s * s * ib;
  double q12 = c * s * (ia - ib);
  double q22 = s * s * ia + c * c * ib;
  q11 /= sx * sx;
  q12 /= sx * sy;
  q22 /= sy * sy;
  const double mean = 0.5 * (q11 + q22);
  const double diff = 0.5 * (q11 - q22);
  const double root = std::sqrt(diff * diff + q12 * q12);
  const double lambda_small = mean - root;
  const double lambda_large = mean + root;
  // eigenvector of lambda_small (the longer axis)
  const double phi = 0.5 * std::atan2(-2 * q12, -(q11 - q22));
  const double dir_x = c * sx;
  const double dir_y = s * sy;
  const double dot = std::cos(phi) * dir_x + std::sin(phi) * dir_y;
  const double norm = std::hypot(dir_x, dir_y);
  const bool ra_is_long = std::abs(dot) >= norm * std::sqrt(0.5);
  const double r_long = 1.0 / std::sqrt(lambda_small);
  const double r_short = 1.0 / std::sqrt(lambda_large);
  if (ra_is_long) {
    out.ra = r_long;
    out.rb = r_short;
    out.theta = dot >= 0 ? phi : phi + M_PI;
  } else {
    out.ra = r_short;
    out.rb = r_long;
    const double perp = phi + M_PI / 2;
    const double d2 = std::cos(perp) * dir_x + std::sin(perp) * dir_y;
    out.theta = d2 >= 0 ? perp : perp + M_PI;
  }
  return out;
}

/// Rasterizes the closed ellipse onto a width x height canvas. A pixel is set
/// when its center (i + 0.5, j + 0.5) lies inside the ellipse; the parts
/// outside the canvas are clipped.
inline void rasterize_ellipse_into(const face_ellipse& e, binary_mask& mask) {
  if (!(e.ra > 0) || !(e.rb > 0)) return;
  const auto width = static_cast<long>(mask.width());
  const auto height = static_cast<long>(mask.height());
  const point half = ellipse_half_extents(e);
  const long y_lo = std::max(0L, static_cast<long>(std::floor(e.cy - half.y - 0.5)) - 1);
  const long y_hi = std::min(height - 1, static_cast<long>(std::ceil(e.cy + half.y - 0.5)) + 1);
  if (y_lo > y_hi) return;

  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  const double ia = 1.0 / (e.ra * e.ra);
  const double ib = 1.0 / (e.rb * e.rb);
  const double q11 = c * c * ia + s * s * ib;
  const double q12 = c * s * (ia - ib);
  const double q22 = s * s * ia + c * c * ib;

  for (long j = y_lo; j <= y_hi; ++j) {
    const double dy = (static_cast<double>(j) + 0.5) - e.cy;
    // q11 dx^2 + 2 q12 dy dx + (q22 dy^2 - 1) <= 0
    const double b = q12 * dy;
    const double disc = b * b - q11 * (q22 * dy * dy - 1.0);
    // the candidate span is widened by one pixel and every candidate goes
    // through ellipse_contains, so the span only has to be conservative
    const double root = std::sqrt(std::max(disc, 0.0));
    const double x0 = e.cx + (-b - root) / q11;
    const double x1 = e.cx + (-b + root) / q11;
    const long i_lo = std::max(0L, static_cast<long>(std::floor(x0 - 0.5)) - 1);
    const long i_hi = std::min(width - 1, static_cast<long>(std::ceil(x1 - 0.5)) + 1);
    for (long i = i_lo; i <= i_hi; ++i) {
      if (ellipse_contains(e, static_cast<double>(i) + 0.5, static_cast<double>(j) + 0.5))
        mask.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
}

inline binary_mask rasterize_ellipse(const face_ellipse& e, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw error("rasterize_ellipse: canvas must be non-empty");
  binary_mask mask(width, height);
  rasterize_ellipse_into(e, mask);
  return mask;
}

/// Per-pixel OR of a non-empty set of equally sized masks.
inline binary_mask union_masks(std::span<const binary_mask> masks) {
  if (masks.empty()) throw error("union_masks: empty mask sequence");
  binary_mask out = masks.front();
  for (const auto& m : masks.subspan(1)) {
    if (!m.same_shape(out)) throw dimension_mismatch("union_masks: mask dimensions differ");
    for (std::size_t i = 0; i < out.size(); ++i)
      if (m[i]) out.set_index(i);
  }
  return out;
}

/// Union of the ellipses of all faces, rasterized directly into one mask.
inline binary_mask face_mask(std::span<const face_annotation> faces, std::size_t width,
                             std::size_t height) {
  binary_mask mask(width, height);
  for (const auto& f : faces) rasterize_ellipse_into(to_ellipse(f), mask);
  return mask;
}

}  // namespace faceblur
