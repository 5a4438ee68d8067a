#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "faceblur/raster_io.hpp"
#include "mini_corpus.hpp"

using namespace faceblur;
namespace ft = faceblur::testing;

TEST(Png, RoundTripsQuantizedSamples) {
  const auto dir = ft::fresh_dir("png");
  std::mt19937 rng(1);
  image img = ft::random_image(rng, 33, 21);
  for (auto& v : img.samples()) v = std::round(v * 255.0f) / 255.0f;
  write_png(dir / "a.png", img);
  const image back = read_png(dir / "a.png");
  ASSERT_TRUE(back.same_shape(img));
  EXPECT_LT(ft::max_abs_diff(back, img), 1e-6);

  const image gray = ft::random_image(rng, 7, 5, 1);
  write_png(dir / "g.png", gray);
  const image g = read_image(dir / "g.png");
  EXPECT_EQ(g.channels(), 1u);
  EXPECT_LE(ft::max_abs_diff(g, gray), 0.5 / 255 + 1e-6);
  std::filesystem::remove_all(dir);
}

TEST(Png, ClampsOutOfRangeSamplesOnWrite) {
  const auto dir = ft::fresh_dir("png_clamp");
  image img(2, 1, 1);
  img.at(0, 0, 0) = -0.5f;
  img.at(1, 0, 0) = 1.5f;
  write_png(dir / "c.png", img);
  const image back = read_png(dir / "c.png");
  EXPECT_EQ(back.at(0, 0, 0), 0.0f);
  EXPECT_EQ(back.at(1, 0, 0), 1.0f);
  std::filesystem::remove_all(dir);
}

TEST(Png, WritingIsDeterministic) {
  const auto dir = ft::fresh_dir("png_det");
  std::mt19937 rng(2);
  const image img = ft::random_image(rng, 64, 64);
  write_png(dir / "1.png", img);
  write_png(dir / "2.png", img);
  std::ifstream a(dir / "1.png", std::ios::binary), b(dir / "2.png", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
  std::filesystem::remove_all(dir);
}

TEST(Jpeg, DecodesRgb) {
  const image img = read_image(std::filesystem::path(FACEBLUR_TEST_DATA) / "solid_16x8.jpg");
  EXPECT_EQ(img.width(), 16u);
  EXPECT_EQ(img.height(), 8u);
  EXPECT_EQ(img.channels(), 3u);
  EXPECT_NEAR(img.at(3, 3, 0), 200 / 255.0, 3 / 255.0);
  EXPECT_NEAR(img.at(3, 3, 1), 60 / 255.0, 3 / 255.0);
  EXPECT_NEAR(img.at(3, 3, 2), 20 / 255.0, 3 / 255.0);
}

TEST(Raster, RejectsUnknownAndMissingFiles) {
  const auto dir = ft::fresh_dir("raster_bad");
  std::ofstream(dir / "x.png") << "GIF89a....";
  EXPECT_THROW(read_image(dir / "x.png"), io_error);
  EXPECT_THROW(read_image(dir / "missing.png"), io_error);
  std::ofstream(dir / "t.jpg", std::ios::binary) << "\xFF\xD8\xFF\xE0truncated";
  EXPECT_THROW(read_image(dir / "t.jpg"), io_error);
  EXPECT_TRUE(is_raster_file("a/b.JPG"));
  EXPECT_FALSE(is_raster_file("a/b.txt"));
  std::filesystem::remove_all(dir);
}
