#pragma once

// ONNX-backed implementations of the detector and blur-network contracts.
// Requires OpenCV's dnn module; everything else in the library is free of it.

#include <filesystem>
#include <mutex>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "faceblur/backends.hpp"

namespace faceblur {

class model_error : public error {
 public:
  using error::error;
};

namespace detail {

inline cv::dnn::Net load_onnx(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw model_error("model file not found: " + path.string());
  try {
    cv::dnn::Net net = cv::dnn::readNetFromONNX(path.string());
    if (net.empty()) throw model_error("model file holds no graph: " + path.string());
    net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    return net;
  } catch (const cv::Exception& e) {
    throw model_error("cannot load model " + path.string() + ": " + e.what());
  }
}

/// NCHW float blob from an RGB (or gray, replicated) image, with a per-sample transform.
template <class F>
cv::Mat to_blob(const image& img, F&& transform) {
  const int dims[] = {1, 3, static_cast<int>(img.height()), static_cast<int>(img.width())};
  cv::Mat blob(4, dims, CV_32F);
  float* dst = blob.ptr<float>();
  const std::size_t n = img.plane_size();
  for (std::size_t c = 0; c < 3; ++c) {
    const auto src = img.plane(img.channels() == 1 ? 0 : c);
    for (std::size_t i = 0; i < n; ++i) dst[c * n + i] = transform(src[i], c);
  }
  return blob;
}

inline cv::Mat run(cv::dnn::Net& net, const cv::Mat& blob) {
  try {
    net.setInput(blob);
    return net.forward().clone();
  } catch (const cv::Exception& e) {
    throw model_error(std::string("inference failed: ") + e.what());
  }
}

}  // namespace detail

/// yolov5-face style detector. Input: letterboxed RGB in [0,1], padding 114/255.
/// Output: [1, K, 16] candidate rows in network-input pixels.
/// One cv::dnn::Net is shared; calls are serialized by an internal mutex.
class onnx_detector final : public detector_backend {
 public:
  /// `input_size` 0 means run at the original resolution.
  onnx_detector(const std::filesystem::path& model, std::size_t input_size, detection_params params = {})
      : net_(detail::load_onnx(model)), input_size_(input_size), params_(params) {
    if (input_size != 0 && input_size != 192 && input_size != 256 && input_size != 512)
      throw error("detector input size must be 192, 256, 512 or original");
  }

  std::vector<face_box> detect(const image& img, const frame_context&) const override {
    const letterbox lb = letterbox::fit(img.width(), img.height(), input_size_);
    const image resized = resample(img, lb.resized_width, lb.resized_height);
    image canvas(lb.canvas, lb.canvas, 3, 114.0f / 255.0f);
    const auto px = static_cast<std::size_t>(lb.pad_x);
    const auto py = static_cast<std::size_t>(lb.pad_y);
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t sc = resized.channels() == 1 ? 0 : c;
      for (std::size_t y = 0; y < resized.height(); ++y)
        for (std::size_t x = 0; x < resized.width(); ++x) canvas.at(x + px, y + py, c) = resized.at(x, y, sc);
    }
    const cv::Mat blob = detail::to_blob(canvas, [](float v, std::size_t) { return v; });
    cv::Mat out;
    {
      std::lock_guard lock(mutex_);
      out = detail::run(net_, blob);
    }
    if (out.total() % detector_row_size != 0)
      throw model_error("detector output has " + std::to_string(out.total()) +
                        " values, not a multiple of " + std::to_string(detector_row_size));
    const std::span<const float> rows(out.ptr<float>(), out.total());
    return decode_detections(rows, lb, img.width(), img.height(), params_);
  }

  std::string name() const override { return "onnx"; }
  std::size_t input_size() const noexcept { return input_size_; }

 private:
  mutable cv::dnn::Net net_;
  mutable std::mutex mutex_;
  std::size_t input_size_;
  detection_params params_;
};

/// Image-to-image network on standardized RGB. The output is
/// de-standardized and clamped to [0,1]; gray inputs are replicated to three
/// channels and averaged back.
class onnx_blurnet final : public blurnet_backend {
 public:
  explicit onnx_blurnet(const std::filesystem::path& model, channel_normalization norm = {})
      : net_(detail::load_onnx(model)), norm_(norm) {}

  image forward(const image& img, const frame_context&) const override {
    if (img.width() != img.height()) throw error("blur network input must be square");
    const cv::Mat blob = detail::to_blob(img, [this](float v, std::size_t c) {
      return static_cast<float>((v - norm_.mean[c]) / norm_.std[c]);
    });
    cv::Mat out;
    {
      std::lock_guard lock(mutex_);
      out = detail::run(net_, blob);
    }
    const std::size_t n = img.plane_size();
    if (out.dims != 4 || out.size[0] != 1 || out.size[1] != 3 ||
        static_cast<std::size_t>(out.size[2]) != img.height() ||
        static_cast<std::size_t>(out.size[3]) != img.width())
      throw model_error("blur network output shape does not match its input");
    const float* src = out.ptr<float>();
    image result(img.width(), img.height(), img.channels());
    for (std::size_t i = 0; i < n; ++i) {
      float rgb[3];
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = src[c * n + i] * norm_.std[c] + norm_.mean[c];
        rgb[c] = static_cast<float>(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0));
      }
      if (img.channels() == 1) {
        result.plane(0)[i] = (rgb[0] + rgb[1] + rgb[2]) / 3.0f;
      } else {
        for (std::size_t c = 0; c < 3; ++c) result.plane(c)[i] = rgb[c];
      }
    }
    return result;
  }

  std::string name() const override { return "onnx"; }

 private:
  mutable cv::dnn::Net net_;
  mutable std::mutex mutex_;
  channel_normalization norm_;
};

}  // namespace faceblur
