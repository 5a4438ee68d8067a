#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "faceblur/geometry.hpp"
#include "support.hpp"

using namespace faceblur;
using faceblur::testing::brute_mask;

TEST(Geometry, BoxToEllipseIsAxisAlignedWithHalfSides) {
  const face_box b{10, 20, 30, 50, {}, {}};
  const face_ellipse e = box_to_ellipse(b);
  EXPECT_DOUBLE_EQ(e.ra, 15);
  EXPECT_DOUBLE_EQ(e.rb, 25);
  EXPECT_DOUBLE_EQ(e.theta, 0);
  EXPECT_DOUBLE_EQ(e.cx, 25);
  EXPECT_DOUBLE_EQ(e.cy, 45);
  EXPECT_EQ(ellipse_bounding_box(e), (face_box{10, 20, 30, 50, {}, {}}));
}

TEST(Geometry, BoundingBoxOfRotatedEllipse) {
  const face_ellipse e{10, 4, M_PI / 2, 50, 50};
  const face_box b = ellipse_bounding_box(e);
  EXPECT_NEAR(b.w, 8, 1e-9);
  EXPECT_NEAR(b.h, 20, 1e-9);
  EXPECT_NEAR(b.x, 46, 1e-9);
  EXPECT_NEAR(b.y, 40, 1e-9);
}

TEST(Geometry, MinDimension) {
  EXPECT_DOUBLE_EQ(face_min_dimension(face_box{0, 0, 12, 7, {}, {}}), 7);
  EXPECT_DOUBLE_EQ(face_min_dimension(face_ellipse{9, 5, 0.3, 0, 0}), 10);
  EXPECT_FALSE(has_positive_area(face_annotation{face_box{0, 0, 0, 7, {}, {}}}));
  EXPECT_TRUE(has_positive_area(face_annotation{face_ellipse{1, 1, 0, 0, 0}}));
}

TEST(Geometry, ContainsUsesClosedBoundaryAndRotation) {
  const face_ellipse e{4, 2, 0, 10, 10};
  EXPECT_TRUE(ellipse_contains(e, 14, 10));
  EXPECT_TRUE(ellipse_contains(e, 10, 12));
  EXPECT_FALSE(ellipse_contains(e, 10, 12.01));
  const face_ellipse r{4, 2, M_PI / 2, 10, 10};
  EXPECT_TRUE(ellipse_contains(r, 10, 13.9));
  EXPECT_FALSE(ellipse_contains(r, 13.9, 10));
  EXPECT_FALSE(ellipse_contains(face_ellipse{0, 3, 0, 0, 0}, 0, 0));
}

TEST(Geometry, RasterizationMatchesBruteForceOnRandomEllipses) {
  std::mt19937 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto e = faceblur::testing::random_ellipse(rng, 97, 64, 0.3, 45);
    EXPECT_EQ(rasterize_ellipse(e, 97, 64), brute_mask(e, 97, 64)) << "ellipse " << i;
  }
}

TEST(Geometry, RasterizedAreaApproachesAnalyticArea) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> r(12, 60), t(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const face_ellipse e{r(rng), r(rng), t(rng), 100, 100};
    const double area = M_PI * e.ra * e.rb;
    const double count = static_cast<double>(rasterize_ellipse(e, 200, 200).count());
    EXPECT_LT(std::abs(count - area) / area, 0.02);
  }
}

TEST(Geometry, RasterizationClipsAndHandlesDegenerateInput) {
  const face_ellipse off{5, 5, 0, -20, -20};
  EXPECT_TRUE(rasterize_ellipse(off, 10, 10).none());
  const face_ellipse corner{5, 5, 0, 0, 0};
  EXPECT_EQ(rasterize_ellipse(corner, 10, 10), brute_mask(corner, 10, 10));
  EXPECT_TRUE(rasterize_ellipse(face_ellipse{0, 5, 0, 5, 5}, 10, 10).none());
  EXPECT_THROW(rasterize_ellipse(corner, 0, 10), error);
}

TEST(Geometry, UnionMasks) {
  const auto a = rasterize_ellipse({3, 3, 0, 5, 5}, 20, 12);
  const auto b = rasterize_ellipse({3, 2, 0.4, 12, 6}, 20, 12);
  const std::vector<binary_mask> ms{a, b};
  const auto u = union_masks(ms);
  for (std::size_t y = 0; y < 12; ++y)
    for (std::size_t x = 0; x < 20; ++x) EXPECT_EQ(u.test(x, y), a.test(x, y) || b.test(x, y));
  EXPECT_THROW(union_masks(std::span<const binary_mask>{}), error);
  const std::vector<binary_mask> bad{a, binary_mask(4, 4)};
  EXPECT_THROW(union_masks(bad), dimension_mismatch);

  const std::vector<face_annotation> faces{face_ellipse{3, 3, 0, 5, 5}, face_ellipse{3, 2, 0.4, 12, 6}};
  EXPECT_EQ(face_mask(faces, 20, 12), u);
}

TEST(Geometry, ScaleEllipseMatchesPointMapping) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> r(3, 30), t(-3, 3), s(0.3, 3);
  for (int i = 0; i < 200; ++i) {
    const face_ellipse e{r(rng), r(rng), t(rng), 40, 30};
    const double sx = s(rng), sy = s(rng);
    const face_ellipse f = scale_ellipse(e, sx, sy);
    // boundary points of e map onto the boundary of f
    for (int k = 0; k < 16; ++k) {
      const double a = k * M_PI / 8;
      const double u = e.ra * std::cos(a), v = e.rb * std::sin(a);
      const double px = (e.cx + u * std::cos(e.theta) - v * std::sin(e.theta)) * sx;
      const double py = (e.cy + u * std::sin(e.theta) + v * std::cos(e.theta)) * sy;
      const double c = std::cos(f.theta), sn = std::sin(f.theta);
      const double uu = ((px - f.cx) * c + (py - f.cy) * sn) / f.ra;
      const double vv = (-(px - f.cx) * sn + (py - f.cy) * c) / f.rb;
      EXPECT_NEAR(uu * uu + vv * vv, 1.0, 1e-9);
    }
    EXPECT_NEAR(f.ra * f.rb, e.ra * e.rb * sx * sy, 1e-9 * e.ra * e.rb * sx * sy);
  }
  const face_ellipse axis{4, 2, 0, 10, 10};
  EXPECT_EQ(scale_ellipse(axis, 2, 3), (face_ellipse{8, 6, 0, 20, 30}));
}
