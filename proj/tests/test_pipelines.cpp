#include <gtest/gtest.h>

#include <random>

#include "faceblur/pipelines.hpp"
#include "support.hpp"

using namespace faceblur;
namespace ft = faceblur::testing;

namespace {

oracle_annotations two_faces() {
  oracle_annotations ann;
  ann.insert("f", {face_box{20, 30, 60, 80, {}, {}}, face_box{150, 40, 36, 44, {}, {}}});
  ann.insert("empty", {});
  ann.insert("flat", {face_box{10, 10, 0, 30, {}, {}}, face_box{100, 50, 40, 40, {}, {}}});
  return ann;
}

pipeline_config direct_cfg() { return pipeline_config{}; }

pipeline_config indirect_cfg(std::size_t d) {
  pipeline_config c;
  c.mode = pipeline_mode::indirect;
  c.size = d;
  return c;
}

}  // namespace

TEST(Direct, BlursInsideMaskOnlyWithOneSigma) {
  std::mt19937 rng(1);
  const image frame = ft::random_image(rng, 240, 160);
  const oracle_detector det(two_faces());
  const auto r = run_direct(frame, det, direct_cfg(), frame_context::of(frame, "f"));
  ASSERT_TRUE(r.sigma);
  EXPECT_DOUBLE_EQ(*r.sigma, 9.0);  // min(60, 80, 36, 44) / 4
  const image blurred = ft::dense_blur(frame, 9.0);
  const std::vector<face_annotation> faces{box_to_ellipse({20, 30, 60, 80, {}, {}}),
                                           box_to_ellipse({150, 40, 36, 44, {}, {}})};
  const auto expect_mask = union_masks(std::vector<binary_mask>{ft::brute_mask(std::get<face_ellipse>(faces[0]), 240, 160),
                                                                ft::brute_mask(std::get<face_ellipse>(faces[1]), 240, 160)});
  EXPECT_EQ(r.mask, expect_mask);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 160; ++y)
      for (std::size_t x = 0; x < 240; ++x) {
        if (r.mask.test(x, y)) EXPECT_NEAR(r.output.at(x, y, c), blurred.at(x, y, c), 1e-5);
        else EXPECT_EQ(r.output.at(x, y, c), frame.at(x, y, c));
      }
}

TEST(Direct, NoFacesLeavesFrameUntouched) {
  std::mt19937 rng(2);
  const image frame = ft::random_image(rng, 64, 48);
  const oracle_detector det(two_faces());
  const auto r = run_direct(frame, det, direct_cfg(), frame_context::of(frame, "empty"));
  EXPECT_EQ(r.output, frame);
  EXPECT_FALSE(r.sigma);
}

TEST(Direct, ZeroAreaDetectionsAreIgnored) {
  std::mt19937 rng(3);
  const image frame = ft::random_image(rng, 200, 120);
  const oracle_detector det(two_faces());
  const auto r = run_direct(frame, det, direct_cfg(), frame_context::of(frame, "flat"));
  ASSERT_TRUE(r.sigma);
  EXPECT_DOUBLE_EQ(*r.sigma, 10.0);
}

TEST(Direct, RecordsStageTimings) {
  std::mt19937 rng(4);
  const image frame = ft::random_image(rng, 100, 100);
  const oracle_detector det(two_faces());
  stage_timings t;
  run_direct(frame, det, direct_cfg(), frame_context::of(frame, "f"), &t);
  std::vector<std::string> names;
  for (const auto& s : t.stages()) names.push_back(s.first);
  EXPECT_EQ(names, (std::vector<std::string>{"detect", "mask", "blur", "composite"}));
}

TEST(Indirect, IdentityNetworkIsBitIdentical) {
  std::mt19937 rng(5);
  const identity_blurnet net;
  for (std::size_t d : {192u, 256u, 512u}) {
    const image frame = ft::random_image(rng, 333, 211);
    EXPECT_EQ(run_indirect(frame, net, indirect_cfg(d), frame_context::of(frame, "x")).output, frame);
  }
}

TEST(Indirect, FramesWithoutFacesPassThrough) {
  std::mt19937 rng(6);
  const image frame = ft::random_image(rng, 300, 200);
  const oracle_blurnet net(two_faces());
  const auto r = run_indirect(frame, net, indirect_cfg(256), frame_context::of(frame, "empty"));
  EXPECT_EQ(r.output, frame);
  EXPECT_TRUE(r.mask.none());
}

TEST(Indirect, OracleNetworkCoversFacesAndKeepsBackground) {
  std::mt19937 rng(7);
  const image frame = ft::textured_image(rng, 320, 240);
  const oracle_blurnet net(two_faces());
  const auto r = run_indirect(frame, net, indirect_cfg(512), frame_context::of(frame, "f"));
  const auto truth = face_mask(std::vector<face_annotation>{face_box{20, 30, 60, 80, {}, {}},
                                                            face_box{150, 40, 36, 44, {}, {}}},
                               320, 240);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) covered += truth[i] && r.mask[i];
  EXPECT_GE(static_cast<double>(covered) / static_cast<double>(truth.count()), 0.95);
  // pixels outside the mask are the original ones
  for (std::size_t i = 0; i < r.mask.size(); ++i)
    if (!r.mask[i]) {
      ASSERT_EQ(r.output.plane(0)[i], frame.plane(0)[i]);
    }
}

TEST(Indirect, SquareFrameAtInferenceSizeSkipsResampling) {
  std::mt19937 rng(8);
  const image frame = ft::textured_image(rng, 192, 192);
  oracle_annotations ann;
  ann.insert("s", {face_ellipse{30, 20, 0.3, 96, 96}});
  const oracle_blurnet net(ann);
  const auto r = run_indirect(frame, net, indirect_cfg(192), frame_context::of(frame, "s"));
  EXPECT_EQ(r.mask, r.small_mask);
  const image net_out = net.forward(frame, frame_context::of(frame, "s"));
  EXPECT_EQ(r.output, composite(frame, net_out, r.mask));
}

TEST(Indirect, RejectsMissingSizeAndBadNetworks) {
  const image frame(10, 10, 3);
  pipeline_config c;
  c.mode = pipeline_mode::indirect;
  EXPECT_THROW(run_indirect(frame, identity_blurnet{}, c, {}), error);
  struct shrink final : blurnet_backend {
    image forward(const image&, const frame_context&) const override { return image(2, 2, 3); }
    std::string name() const override { return "shrink"; }
  };
  EXPECT_THROW(run_indirect(frame, shrink{}, indirect_cfg(192), {}), error);
}

TEST(Config, Validation) {
  pipeline_config c;
  c.size = 300;
  EXPECT_THROW(c.validate(), error);
  c.size = std::nullopt;
  c.mode = pipeline_mode::indirect;
  EXPECT_THROW(c.validate(), error);
  c.size = 256;
  EXPECT_NO_THROW(c.validate());
  c.threshold = -1;
  EXPECT_THROW(c.validate(), error);
}

TEST(Sequence, PreservesOrderAcrossWorkersAndIsolatesFailures) {
  std::mt19937 rng(9);
  std::vector<image> frames;
  for (int i = 0; i < 12; ++i) frames.push_back(ft::random_image(rng, 8 + i, 8));
  const frame_function fn = [](const image& f, const frame_context& ctx) {
    if (ctx.id == "5") throw error("boom");
    return gaussian_blur(f, 1.0);
  };
  std::vector<std::vector<std::string>> ids;
  std::vector<std::vector<image>> outs;
  for (std::size_t workers : {1u, 3u, 8u}) {
    vector_source src(frames);
    vector_sink sink;
    std::size_t reported = 0;
    const auto rep = process_sequence(src, sink, fn, workers, [&](const frame_failure&) { ++reported; });
    EXPECT_EQ(rep.processed, 11u);
    ASSERT_EQ(rep.failures.size(), 1u);
    EXPECT_EQ(rep.failures[0].index, 5u);
    EXPECT_EQ(reported, 1u);
    ids.push_back(sink.ids);
    outs.push_back(sink.frames);
  }
  EXPECT_EQ(ids[0], ids[1]);
  EXPECT_EQ(ids[0], ids[2]);
  EXPECT_EQ(outs[0], outs[1]);
  EXPECT_EQ(outs[0], outs[2]);
  EXPECT_EQ(ids[0].front(), "0");
  EXPECT_EQ(ids[0][5], "6");
}

TEST(Sequence, SinkFailuresAreReported) {
  struct bad_sink {
    void write(std::size_t i, const std::string&, const image&) {
      if (i == 1) throw error("disk full");
    }
  } sink;
  vector_source src(std::vector<image>(3, image(4, 4, 3)));
  const auto rep = process_sequence(src, sink, [](const image& f, const frame_context&) { return f; });
  EXPECT_EQ(rep.processed, 2u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].message, "disk full");
}
