#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "faceblur/geometry.hpp"
#include "faceblur/image.hpp"

namespace faceblur {

/// Blur strength as a function of the smallest face in a frame:
/// sigma = clamp(min_dimension / scale, sigma_min, sigma_max).
struct sigma_rule {
  double scale = 4.0;
  double sigma_min = 1.0;
  double sigma_max = 50.0;

  void validate() const {
    if (!(scale > 0)) throw error("sigma rule: scale must be positive");
    if (!(sigma_min > 0) || !(sigma_min <= sigma_max))
      throw error("sigma rule: need 0 < sigma_min <= sigma_max");
  }
};

/// Per-channel standardization constants, (value - mean) / std.
struct channel_normalization {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};

  /// Constants for a channel of an image with `channels` planes. Single-channel
  /// images use the average of the three color constants.
  double mean_of(std::size_t c, std::size_t channels) const {
    if (channels == 1) return (mean[0] + mean[1] + mean[2]) / 3;
    return mean[c];
  }
  double std_of(std::size_t c, std::size_t channels) const {
    if (channels == 1) return (std[0] + std[1] + std[2]) / 3;
    return std[c];
  }
};

namespace detail {

inline std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += w[i + radius];
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(w[i] / sum);
  return out;
}

template <class T>
void require_same_shape(const basic_image<T>& a, const basic_image<T>& b, const char* what) {
  if (!a.same_shape(b)) throw dimension_mismatch(std::string(what) + ": image dimensions differ");
}

template <class T>
void require_mask_shape(const basic_image<T>& img, const binary_mask& m, const char* what) {
  if (img.width() != m.width() || img.height() != m.height())
    throw dimension_mismatch(std::string(what) + ": mask and image dimensions differ");
}

/// Source coordinate for bilinear sampling with pixel-center alignment,
/// split into base index and fractional weight, clamped to the edges.
struct tap {
  std::size_t i0;
  std::size_t i1;
  float frac;
};

inline std::vector<tap> bilinear_taps(std::size_t src, std::size_t dst) {
  std::vector<tap> taps(dst);
  const double ratio = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t d = 0; d < dst; ++d) {
    double s = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    const std::size_t i1 = std::min(i0 + 1, src - 1);
    taps[d] = {i0, i1, static_cast<float>(s - static_cast<double>(i0))};
  }
  return taps;
}

}  // namespace detail

/// Separable Gaussian blur with replicate borders. The kernel is truncated at
/// radius ceil(3 sigma) and renormalized; rows are filtered first, then
/// columns. sigma == 0 returns the input unchanged.
template <class T>
basic_image<T> gaussian_blur(const basic_image<T>& img, double sigma) {
  if (!(sigma >= 0)) throw error("gaussian_blur: sigma must be non-negative");
  if (sigma == 0 || img.empty()) return img;

  const std::vector<float> kernel = detail::gaussian_kernel(sigma);
  const auto radius = static_cast<long>(kernel.size() / 2);
  const std::size_t w = img.width();
  const std::size_t h = img.height();

  basic_image<T> tmp(w, h, img.channels());
  basic_image<T> out(w, h, img.channels());
  std::vector<float> padded(w + 2 * static_cast<std::size_t>(radius));
  std::vector<float> acc(w);

  for (std::size_t c = 0; c < img.channels(); ++c) {
    const auto src = img.plane(c);
    auto mid = tmp.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      const T* row = src.data() + y * w;
      for (long i = 0; i < static_cast<long>(padded.size()); ++i) {
        const long x = std::clamp(i - radius, 0L, static_cast<long>(w) - 1);
        padded[static_cast<std::size_t>(i)] = static_cast<float>(row[x]);
      }
      T* dst = mid.data() + y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const float* p = padded.data() + x;
        float s = 0;
        for (std::size_t k = 0; k < kernel.size(); ++k) s += kernel[k] * p[k];
        dst[x] = static_cast<T>(s);
      }
    }

    auto dst_plane = out.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (long k = -radius; k <= radius; ++k) {
        const long yy = std::clamp(static_cast<long>(y) + k, 0L, static_cast<long>(h) - 1);
        const float wk = kernel[static_cast<std::size_t>(k + radius)];
        const T* row = mid.data() + static_cast<std::size_t>(yy) * w;
        for (std::size_t x = 0; x < w; ++x) acc[x] += wk * static_cast<float>(row[x]);
      }
      T* dst = dst_plane.data() + y * w;
      for (std::size_t x = 0; x < w; ++x) dst[x] = static_cast<T>(acc[x]);
    }
  }
  return out;
}

/// One blur sigma for the whole frame, driven by the smallest face.
inline double select_sigma_from_dimensions(std::span<const double> min_dims, const sigma_rule& rule) {
  rule.validate();
  if (min_dims.empty()) throw error("select_sigma: no faces");
  const double smallest = *std::min_element(min_dims.begin(), min_dims.end());
  return std::clamp(smallest / rule.scale, rule.sigma_min, rule.sigma_max);
}

inline double select_sigma(std::span<const face_box> faces, const sigma_rule& rule) {
  std::vector<double> dims;
  dims.reserve(faces.size());
  for (const auto& f : faces) dims.push_back(face_min_dimension(f));
  return select_sigma_from_dimensions(dims, rule);
}

inline double select_sigma(std::span<const face_annotation> faces, const sigma_rule& rule) {
  std::vector<double> dims;
  dims.reserve(faces.size());
  for (const auto& f : faces) dims.push_back(face_min_dimension(f));
  return select_sigma_from_dimensions(dims, rule);
}

/// overlay where the mask is set, base elsewhere.
template <class T>
basic_image<T> composite(const basic_image<T>& base, const basic_image<T>& overlay,
                         const binary_mask& mask) {
  detail::require_same_shape(base, overlay, "composite");
  detail::require_mask_shape(base, mask, "composite");
  basic_image<T> out = base;
  for (std::size_t c = 0; c < base.channels(); ++c) {
    auto dst = out.plane(c);
    const auto src = overlay.plane(c);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) dst[i] = src[i];
  }
  return out;
}

/// Bilinear resampling with pixel-center alignment and clamped edges.
template <class T>
basic_image<T> resample(const basic_image<T>& img, std::size_t new_width, std::size_t new_height) {
  if (new_width == 0 || new_height == 0) throw error("resample: target dimensions must be positive");
  if (img.empty()) throw error("resample: empty source image");
  if (new_width == img.width() && new_height == img.height()) return img;

  const auto xs = detail::bilinear_taps(img.width(), new_width);
  const auto ys = detail::bilinear_taps(img.height(), new_height);
  basic_image<T> out(new_width, new_height, img.channels());
  const std::size_t sw = img.width();
  for (std::size_t c = 0; c < img.channels(); ++c) {
    const auto src = img.plane(c);
    auto dst = out.plane(c);
    for (std::size_t y = 0; y < new_height; ++y) {
      const T* r0 = src.data() + ys[y].i0 * sw;
      const T* r1 = src.data() + ys[y].i1 * sw;
      const float fy = ys[y].frac;
      T* d = dst.data() + y * new_width;
      for (std::size_t x = 0; x < new_width; ++x) {
        const auto& t = xs[x];
        const float top = static_cast<float>(r0[t.i0]) +
                          t.frac * (static_cast<float>(r0[t.i1]) - static_cast<float>(r0[t.i0]));
        const float bot = static_cast<float>(r1[t.i0]) +
                          t.frac * (static_cast<float>(r1[t.i1]) - static_cast<float>(r1[t.i0]));
        d[x] = static_cast<T>(top + fy * (bot - top));
      }
    }
  }
  return out;
}

/// Bilinear resampling of the 0/1 field, re-binarized at 0.5.
inline binary_mask resample_mask(const binary_mask& mask, std::size_t new_width, std::size_t new_height) {
  if (new_width == 0 || new_height == 0)
    throw error("resample_mask: target dimensions must be positive");
  if (mask.size() == 0) throw error("resample_mask: empty source mask");
  if (new_width == mask.width() && new_height == mask.height()) return mask;

  const auto xs = detail::bilinear_taps(mask.width(), new_width);
  const auto ys = detail::bilinear_taps(mask.height(), new_height);
  const std::size_t sw = mask.width();
  binary_mask out(new_width, new_height);
  for (std::size_t y = 0; y < new_height; ++y) {
    const std::size_t r0 = ys[y].i0 * sw;
    const std::size_t r1 = ys[y].i1 * sw;
    const float fy = ys[y].frac;
    for (std::size_t x = 0; x < new_width; ++x) {
      const auto& t = xs[x];
      const float a = mask[r0 + t.i0] ? 1.0f : 0.0f;
      const float b = mask[r0 + t.i1] ? 1.0f : 0.0f;
      const float c = mask[r1 + t.i0] ? 1.0f : 0.0f;
      const float d = mask[r1 + t.i1] ? 1.0f : 0.0f;
      const float top = a + t.frac * (b - a);
      const float bot = c + t.frac * (d - c);
      if (top + fy * (bot - top) >= 0.5f) out.set(x, y);
    }
  }
  return out;
}

/// Marks pixels whose channel-averaged absolute difference, measured in
/// standardized units, exceeds `threshold`.
template <class T>
binary_mask abs_diff_mask(const basic_image<T>& a, const basic_image<T>& b, double threshold,
                          const channel_normalization& norm = {}) {
  detail::require_same_shape(a, b, "abs_diff_mask");
  if (!(threshold >= 0)) throw error("abs_diff_mask: threshold must be non-negative");
  const std::size_t n = a.plane_size();
  const std::size_t channels = a.channels();
  std::vector<double> diff(n, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    const double inv_std = 1.0 / norm.std_of(c, channels);
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    for (std::size_t i = 0; i < n; ++i)
      diff[i] += std::abs(static_cast<double>(pa[i]) - static_cast<double>(pb[i])) * inv_std;
  }
  binary_mask out(a.width(), a.height());
  for (std::size_t i = 0; i < n; ++i)
    if (diff[i] / static_cast<double>(channels) > threshold) out.set_index(i);
  return out;
}

/// Mean absolute sample difference.
template <class T>
double l1_metric(const basic_image<T>& u, const basic_image<T>& v) {
  detail::require_same_shape(u, v, "l1_metric");
  if (u.empty()) return 0.0;
  const auto a = u.samples();
  const auto b = v.samples();
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return sum / static_cast<double>(a.size());
}

/// Mean squared sample difference.
template <class T>
double mse_metric(const basic_image<T>& u, const basic_image<T>& v) {
  detail::require_same_shape(u, v, "mse_metric");
  if (u.empty()) return 0.0;
  const auto a = u.samples();
  const auto b = v.samples();
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

}  // namespace faceblur
