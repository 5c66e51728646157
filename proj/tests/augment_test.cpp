#include <gtest/gtest.h>

#include "texc/augment.hpp"
#include "texc/atlas.hpp"
#include "texc/rng.hpp"

using namespace texc;

namespace {

TextureMap random_texture(int size, Rng& rng) {
  TextureMap t(size, size);
  for (auto& v : t.data) v = rng.uniform();
  return t;
}

}  // namespace

TEST(Tps, ReproducesControlPoints) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point2> src, dst;
    for (int iy = 0; iy < 4; ++iy)
      for (int ix = 0; ix < 4; ++ix) {
        Point2 p{static_cast<float>(ix) / 3.0f, static_cast<float>(iy) / 3.0f};
        src.push_back(p);
        dst.push_back({p.x + rng.uniform(-0.2f, 0.2f), p.y + rng.uniform(-0.2f, 0.2f)});
      }
    TpsTransform tps = TpsTransform::fit(src, dst);
    for (std::size_t i = 0; i < src.size(); ++i) {
      Point2 q = tps.apply(src[i]);
      EXPECT_NEAR(q.x, dst[i].x, 1e-4f);
      EXPECT_NEAR(q.y, dst[i].y, 1e-4f);
    }
  }
}

TEST(Tps, IdentityWhenDstEqualsSrc) {
  std::vector<Point2> pts;
  for (int iy = 0; iy < 4; ++iy)
    for (int ix = 0; ix < 4; ++ix)
      pts.push_back({static_cast<float>(ix) / 3.0f, static_cast<float>(iy) / 3.0f});
  TpsTransform tps = TpsTransform::fit(pts, pts);
  Rng rng(22);
  for (int i = 0; i < 100; ++i) {
    Point2 p{rng.uniform(), rng.uniform()};
    Point2 q = tps.apply(p);
    EXPECT_NEAR(q.x, p.x, 1e-5f);
    EXPECT_NEAR(q.y, p.y, 1e-5f);
  }
}

TEST(Tps, AffineMapRecoveredExactly) {
  // a pure affine dst has zero bending energy, so the kernel weights vanish
  // and the fitted map is affine everywhere, not just at the control points
  std::vector<Point2> src, dst;
  for (int iy = 0; iy < 3; ++iy)
    for (int ix = 0; ix < 3; ++ix) {
      Point2 p{static_cast<float>(ix) / 2.0f, static_cast<float>(iy) / 2.0f};
      src.push_back(p);
      dst.push_back({0.8f * p.x + 0.1f * p.y + 0.05f, -0.2f * p.x + 1.1f * p.y - 0.03f});
    }
  TpsTransform tps = TpsTransform::fit(src, dst);
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    Point2 p{rng.uniform(), rng.uniform()};
    Point2 q = tps.apply(p);
    EXPECT_NEAR(q.x, 0.8f * p.x + 0.1f * p.y + 0.05f, 1e-4f);
    EXPECT_NEAR(q.y, -0.2f * p.x + 1.1f * p.y - 0.03f, 1e-4f);
  }
}

TEST(Tps, RejectsDegenerateInput) {
  std::vector<Point2> two{{0, 0}, {1, 1}};
  EXPECT_THROW(TpsTransform::fit(two, two), std::invalid_argument);
  // collinear control points make the affine block rank-deficient
  std::vector<Point2> collinear{{0.0f, 0.0f}, {0.5f, 0.0f}, {1.0f, 0.0f}};
  EXPECT_THROW(TpsTransform::fit(collinear, collinear), std::runtime_error);
}

TEST(AlphaSchedule, PublishedValues) {
  const float delta = 0.025f;
  EXPECT_FLOAT_EQ(alpha_schedule(0, delta), 0.0f);
  EXPECT_FLOAT_EQ(alpha_schedule(1, delta), 0.125f);
  EXPECT_FLOAT_EQ(alpha_schedule(2, delta), 0.15f);
  EXPECT_FLOAT_EQ(alpha_schedule(3, delta), 0.175f);
  EXPECT_FLOAT_EQ(alpha_schedule(7, delta), 0.275f);
  EXPECT_THROW(alpha_schedule(-1, delta), std::invalid_argument);
  EXPECT_THROW(alpha_schedule(1, -0.1f), std::invalid_argument);
}

TEST(RegionWiseAugment, AlphaZeroIsTexelExact) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  Rng rng(31);
  TextureMap t = mask_ground_truth(random_texture(64, rng), m_uv);
  RegionPartition part = build_region_partition(m_uv, atlas);
  TextureMap out = region_wise_augment(t, part, m_uv, 0.0f, rng);
  EXPECT_EQ(out.data, t.data);
}

TEST(RegionWiseAugment, OutputZeroOutsideUvMask) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  Rng rng(32);
  TextureMap t = mask_ground_truth(random_texture(64, rng), m_uv);
  RegionPartition part = build_region_partition(m_uv, atlas);
  for (float alpha : {0.125f, 0.2f, 0.3f}) {
    TextureMap out = region_wise_augment(t, part, m_uv, alpha, rng);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (m_uv.at(y, x) == 0.0f)
          for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(y, x, c), 0.0f);
  }
}

TEST(RegionWiseAugment, ActuallyMovesContent) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  Rng rng(33);
  TextureMap t = mask_ground_truth(random_texture(64, rng), m_uv);
  RegionPartition part = build_region_partition(m_uv, atlas);
  TextureMap out = region_wise_augment(t, part, m_uv, 0.2f, rng);
  double diff = 0.0;
  for (std::size_t i = 0; i < t.data.size(); ++i) diff += std::abs(t.data[i] - out.data[i]);
  EXPECT_GT(diff, 1.0);
}

TEST(RegionWiseAugment, DeterministicGivenSeed) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  Rng tex_rng(34);
  TextureMap t = mask_ground_truth(random_texture(64, tex_rng), m_uv);
  RegionPartition part = build_region_partition(m_uv, atlas);
  Rng a(99), b(99);
  TextureMap oa = region_wise_augment(t, part, m_uv, 0.15f, a);
  TextureMap ob = region_wise_augment(t, part, m_uv, 0.15f, b);
  EXPECT_EQ(oa.data, ob.data);
}

TEST(RegionWiseAugment, RejectsNegativeAlpha) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  RegionPartition part = build_region_partition(m_uv, atlas);
  TextureMap t(64, 64);
  Rng rng(35);
  EXPECT_THROW(region_wise_augment(t, part, m_uv, -0.1f, rng), std::invalid_argument);
}

TEST(WarpRegion, IdentityTransformCopiesCrop) {
  std::vector<Point2> pts;
  for (int iy = 0; iy < 4; ++iy)
    for (int ix = 0; ix < 4; ++ix)
      pts.push_back({static_cast<float>(ix) / 3.0f, static_cast<float>(iy) / 3.0f});
  TpsTransform tps = TpsTransform::fit(pts, pts);
  Rng rng(36);
  TextureMap t = random_texture(32, rng);
  BBox box;
  box.x0 = 4; box.y0 = 6; box.x1 = 20; box.y1 = 25;
  Mask rm(32, 32, 1.0f);
  TextureMap out = warp_region(t, rm, box, tps);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) {
        bool inside = x >= box.x0 && x <= box.x1 && y >= box.y0 && y <= box.y1;
        if (inside)
          EXPECT_NEAR(out.at(y, x, c), t.at(y, x, c), 1e-5f);
        else
          EXPECT_EQ(out.at(y, x, c), 0.0f);
      }
}

TEST(WarpRegion, PureTranslationMatchesShiftOracle) {
  // dst = src + (1/(w-1), 0) in normalized coordinates shifts sampling by
  // exactly one texel to the right, so out(x) == in(x+1) strictly inside
  BBox box;
  box.x0 = 0; box.y0 = 0; box.x1 = 15; box.y1 = 15;
  const float one_texel = 1.0f / 15.0f;
  std::vector<Point2> src, dst;
  for (int iy = 0; iy < 4; ++iy)
    for (int ix = 0; ix < 4; ++ix) {
      Point2 p{static_cast<float>(ix) / 3.0f, static_cast<float>(iy) / 3.0f};
      src.push_back(p);
      dst.push_back({p.x + one_texel, p.y});
    }
  TpsTransform tps = TpsTransform::fit(src, dst);
  Rng rng(37);
  TextureMap t = random_texture(16, rng);
  Mask rm(16, 16, 1.0f);
  TextureMap out = warp_region(t, rm, box, tps);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 15; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(y, x, c), t.at(y, x + 1, c), 1e-4f);
}

TEST(Jitter, IdentityParamsAreNoOp) {
  Rng rng(41);
  TextureMap t = random_texture(16, rng);
  TextureMap out = apply_jitter(t, JitterParams{});
  for (std::size_t i = 0; i < t.data.size(); ++i) EXPECT_NEAR(out.data[i], t.data[i], 1e-6f);
}

TEST(Jitter, BrightnessShiftsValues) {
  TextureMap t(4, 4, 0.5f);
  JitterParams p;
  p.brightness = 0.1f;
  TextureMap out = apply_jitter(t, p);
  for (float v : out.data) EXPECT_NEAR(v, 0.6f, 1e-6f);
}

TEST(Jitter, ContrastScalesAroundMid) {
  TextureMap t(2, 2);
  t.at(0, 0, 0) = 0.3f;
  JitterParams p;
  p.contrast = 1.1f;
  TextureMap out = apply_jitter(t, p);
  EXPECT_NEAR(out.at(0, 0, 0), (0.3f - 0.5f) * 1.1f + 0.5f, 1e-6f);
}

TEST(Jitter, HueRoundTrip) {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    float r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    float h, s, v, r2, g2, b2;
    detail::rgb_to_hsv(r, g, b, h, s, v);
    detail::hsv_to_rgb(h, s, v, r2, g2, b2);
    EXPECT_NEAR(r, r2, 1e-5f);
    EXPECT_NEAR(g, g2, 1e-5f);
    EXPECT_NEAR(b, b2, 1e-5f);
  }
}

TEST(Jitter, DrawStaysInConfiguredRanges) {
  Rng rng(43);
  for (int i = 0; i < 1000; ++i) {
    JitterParams p = draw_jitter(rng);
    EXPECT_GE(p.brightness, -0.1f);
    EXPECT_LE(p.brightness, 0.1f);
    EXPECT_GE(p.contrast, 0.9f);
    EXPECT_LE(p.contrast, 1.1f);
    EXPECT_GE(p.hue, -0.05f);
    EXPECT_LE(p.hue, 0.05f);
  }
}

TEST(AugmentConfig, Validation) {
  AugmentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.p_aug = 1.5f;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.control_grid = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(PadBbox, ClampsToImage) {
  BBox b;
  b.x0 = 2; b.y0 = 3; b.x1 = 10; b.y1 = 12;
  BBox p = pad_bbox(b, 4, 16, 16);
  EXPECT_EQ(p.x0, 0);
  EXPECT_EQ(p.y0, 0);
  EXPECT_EQ(p.x1, 14);
  EXPECT_EQ(p.y1, 15);
  EXPECT_TRUE(pad_bbox(BBox{}, 4, 16, 16).empty());
}
