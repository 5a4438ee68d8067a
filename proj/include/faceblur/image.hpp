#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace faceblur {

/// Base class for all errors raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two rasters (or a raster and a mask) were combined with different shapes.
class dimension_mismatch : public error {
 public:
  using error::error;
};

/// Planar multi-channel raster. Samples are stored plane by plane, each plane
/// row-major, so sample (x, y, c) lives at `c * width * height + y * width + x`.
/// Values are expected in [0, 1] but the type does not clamp.
template <class T>
class basic_image {
 public:
  using value_type = T;

  basic_image() = default;

  basic_image(std::size_t width, std::size_t height, std::size_t channels, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        samples_(width * height * channels, fill) {
    if (channels != 1 && channels != 3)
      throw error("image channel count must be 1 or 3, got " + std::to_string(channels));
  }

  basic_image(std::size_t width, std::size_t height, std::size_t channels, std::vector<T> samples)
      : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
    if (channels != 1 && channels != 3)
      throw error("image channel count must be 1 or 3, got " + std::to_string(channels));
    if (samples_.size() != width * height * channels)
      throw dimension_mismatch("sample buffer length does not match width*height*channels");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t plane_size() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return samples_.empty(); }

  T& at(std::size_t x, std::size_t y, std::size_t c) {
    return samples_[c * plane_size() + y * width_ + x];
  }
  const T& at(std::size_t x, std::size_t y, std::size_t c) const {
    return samples_[c * plane_size() + y * width_ + x];
  }

  std::span<T> plane(std::size_t c) { return {samples_.data() + c * plane_size(), plane_size()}; }
  std::span<const T> plane(std::size_t c) const {
    return {samples_.data() + c * plane_size(), plane_size()};
  }

  std::span<T> samples() noexcept { return samples_; }
  std::span<const T> samples() const noexcept { return samples_; }

  bool same_shape(const basic_image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const basic_image&, const basic_image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<T> samples_;
};

using image = basic_image<float>;

/// Per-pixel boolean raster, row-major.
class binary_mask {
 public:
  binary_mask() = default;
  binary_mask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool test(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { bits_[y * width_ + x] = v ? 1 : 0; }

  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set_index(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool none() const noexcept { return count() == 0; }

  bool same_shape(const binary_mask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  binary_mask complement() const {
    binary_mask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
  }

  friend bool operator==(const binary_mask&, const binary_mask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace faceblur
