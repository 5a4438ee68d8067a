#pragma once

// Reference implementations written without reusing library internals, and
// random generators for property tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "faceblur/geometry.hpp"
#include "faceblur/image.hpp"

namespace faceblur::testing {

// Pixel (x, y) is inside when its center satisfies the rotated-ellipse
// inequality.
inline bool brute_inside(const face_ellipse& e, std::size_t x, std::size_t y) {
  if (!(e.ra > 0 && e.rb > 0)) return false;
  const double px = static_cast<double>(x) + 0.5 - e.cx;
  const double py = static_cast<double>(y) + 0.5 - e.cy;
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  const double u = px * c + py * s;
  const double v = -px * s + py * c;
  return (u * u) / (e.ra * e.ra) + (v * v) / (e.rb * e.rb) <= 1.0;
}

inline binary_mask brute_mask(const face_ellipse& e, std::size_t w, std::size_t h) {
  binary_mask m(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      if (brute_inside(e, x, y)) m.set(x, y);
  return m;
}

// Gaussian kernel of radius ceil(3 sigma), normalized to sum 1.
inline std::vector<double> reference_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  return k;
}

// Dense 2-D convolution with the outer-product kernel and replicated borders.
inline image dense_blur(const image& img, double sigma) {
  const auto k = reference_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = static_cast<int>(img.width());
  const int h = static_cast<int>(img.height());
  image out(img.width(), img.height(), img.channels());
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1);
            const int sy = std::clamp(y + dy, 0, h - 1);
            acc += k[dy + r] * k[dx + r] * img.at(sx, sy, c);
          }
        out.at(x, y, c) = static_cast<float>(acc);
      }
  return out;
}

// Bilinear sample at destination pixel (x, y), pixel-center aligned, edges
// clamped.
inline double bilinear_at(const image& src, std::size_t c, std::size_t x, std::size_t y, std::size_t dw,
                          std::size_t dh) {
  const double sw = static_cast<double>(src.width());
  const double sh = static_cast<double>(src.height());
  double fx = (static_cast<double>(x) + 0.5) * sw / static_cast<double>(dw) - 0.5;
  double fy = (static_cast<double>(y) + 0.5) * sh / static_cast<double>(dh) - 0.5;
  fx = std::clamp(fx, 0.0, sw - 1);
  fy = std::clamp(fy, 0.0, sh - 1);
  const auto x0 = static_cast<std::size_t>(std::floor(fx));
  const auto y0 = static_cast<std::size_t>(std::floor(fy));
  const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
  const double ax = fx - static_cast<double>(x0);
  const double ay = fy - static_cast<double>(y0);
  return (1 - ax) * (1 - ay) * src.at(x0, y0, c) + ax * (1 - ay) * src.at(x1, y0, c) +
         (1 - ax) * ay * src.at(x0, y1, c) + ax * ay * src.at(x1, y1, c);
}

inline image random_image(std::mt19937& rng, std::size_t w, std::size_t h, std::size_t ch = 3) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  image img(w, h, ch);
  for (auto& v : img.samples()) v = u(rng);
  return img;
}

// Smooth-ish texture with strong high-frequency content: a sum of sinusoids
// plus noise.
inline image textured_image(std::mt19937& rng, std::size_t w, std::size_t h, std::size_t ch = 3) {
  std::uniform_real_distribution<float> u(-0.25f, 0.25f);
  image img(w, h, ch);
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double base = 0.5 + 0.15 * std::sin(0.9 * x + 0.3 * c) * std::cos(0.7 * y);
        img.at(x, y, c) = std::clamp(static_cast<float>(base) + u(rng), 0.0f, 1.0f);
      }
  return img;
}

inline face_ellipse random_ellipse(std::mt19937& rng, std::size_t w, std::size_t h, double rmin = 2.0,
                                   double rmax = 40.0) {
  std::uniform_real_distribution<double> r(rmin, rmax);
  std::uniform_real_distribution<double> t(-M_PI, M_PI);
  std::uniform_real_distribution<double> px(-10.0, static_cast<double>(w) + 10.0);
  std::uniform_real_distribution<double> py(-10.0, static_cast<double>(h) + 10.0);
  face_ellipse e;
  e.ra = r(rng);
  e.rb = r(rng);
  e.theta = t(rng);
  e.cx = px(rng);
  e.cy = py(rng);
  return e;
}

inline double max_abs_diff(const image& a, const image& b) {
  double m = 0;
  const auto sa = a.samples();
  const auto sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) m = std::max(m, std::abs(static_cast<double>(sa[i]) - sb[i]));
  return m;
}

}  // namespace faceblur::testing
