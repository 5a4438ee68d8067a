#include <gtest/gtest.h>

#include <random>

#include "faceblur/neural.hpp"
#include "support.hpp"

using namespace faceblur;
namespace ft = faceblur::testing;

namespace {
const std::filesystem::path data_dir = FACEBLUR_TEST_DATA;
}

TEST(OnnxDetector, DecodesFixtureOutput) {
  const onnx_detector det(data_dir / "detector_fixture.onnx", 192);
  std::mt19937 rng(1);
  const image img = ft::random_image(rng, 384, 384);
  const auto boxes = det.detect(img, frame_context::of(img, "x"));
  ASSERT_EQ(boxes.size(), 3u);
  // candidate 1 overlaps candidate 0 and is suppressed
  EXPECT_NEAR(boxes[0].x, 80, 1e-3);
  EXPECT_NEAR(boxes[0].y, 70, 1e-3);
  EXPECT_NEAR(boxes[0].w, 80, 1e-3);
  EXPECT_NEAR(boxes[0].h, 100, 1e-3);
  ASSERT_EQ(boxes[0].landmarks.size(), 5u);
  EXPECT_NEAR(boxes[0].landmarks[2].x, 120, 1e-3);
  // candidate 3 crosses the corner and is clipped
  EXPECT_NEAR(boxes[1].x, 0, 1e-3);
  EXPECT_NEAR(boxes[1].w, 50, 1e-3);
  EXPECT_NEAR(boxes[1].y + boxes[1].h, 384, 1e-3);
  EXPECT_NEAR(boxes[2].x, 250, 1e-3);
  // class score 0.9 times the shared objectness of candidate 0
  EXPECT_NEAR(*boxes[2].confidence, 0.9 * *boxes[0].confidence, 1e-5);
  EXPECT_GT(*boxes[0].confidence, 0.9);
}

TEST(OnnxDetector, FlatImageYieldsNoDetections) {
  const onnx_detector det(data_dir / "detector_fixture.onnx", 192);
  const image flat(300, 200, 3, 0.4f);
  EXPECT_TRUE(det.detect(flat, frame_context::of(flat)).empty());
}

TEST(OnnxDetector, RejectsBadSizesAndMissingFiles) {
  EXPECT_THROW(onnx_detector(data_dir / "detector_fixture.onnx", 300), error);
  EXPECT_THROW(onnx_detector(data_dir / "nope.onnx", 192), model_error);
  EXPECT_THROW(onnx_detector(data_dir / "make_model_fixtures.py", 192), model_error);
}

TEST(OnnxBlurnet, IdentityGraphRoundTrips) {
  const onnx_blurnet net(data_dir / "blurnet_identity.onnx");
  std::mt19937 rng(2);
  const image img = ft::random_image(rng, 192, 192);
  EXPECT_LT(ft::max_abs_diff(net.forward(img, {}), img), 1e-5);
  const image gray = ft::random_image(rng, 192, 192, 1);
  const image g = net.forward(gray, {});
  EXPECT_EQ(g.channels(), 1u);
  EXPECT_LT(ft::max_abs_diff(g, gray), 1e-5);
}

TEST(OnnxBlurnet, BoxGraphAveragesInterior) {
  const onnx_blurnet net(data_dir / "blurnet_box5.onnx");
  std::mt19937 rng(3);
  const image img = ft::random_image(rng, 256, 256);
  const image out = net.forward(img, {});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 2; y < 254; y += 7)
      for (std::size_t x = 2; x < 254; x += 5) {
        double s = 0;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) s += img.at(x + dx, y + dy, c);
        EXPECT_NEAR(out.at(x, y, c), s / 25, 1e-5);
      }
  EXPECT_THROW(net.forward(ft::random_image(rng, 64, 32), {}), error);
}
