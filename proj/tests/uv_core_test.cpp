#include <gtest/gtest.h>

#include "texc/fixtures.hpp"
#include "texc/rng.hpp"
#include "texc/uv_ops.hpp"

using namespace texc;

namespace {

TextureMap random_texture(int size, Rng& rng) {
  TextureMap t(size, size);
  for (auto& v : t.data) v = rng.uniform();
  return t;
}

Mask random_binary_mask(int size, Rng& rng, double p = 0.5) {
  Mask m(size, size);
  for (auto& v : m.data) v = rng.bernoulli(p) ? 1.0f : 0.0f;
  return m;
}

}  // namespace

TEST(ProjectToUv, AllBackgroundGivesZero) {
  Atlas atlas = default_atlas(64);
  TextureMap image(32, 32, 0.7f);
  IuvMap iuv(32, 32);  // all part 0
  auto [tex, mask] = project_to_uv(image, iuv, atlas);
  EXPECT_EQ(mask.sum(), 0.0);
  for (float v : tex.data) EXPECT_EQ(v, 0.0f);
}

TEST(ProjectToUv, SinglePixelWritesOneTexel) {
  Atlas atlas = default_atlas(64);
  TextureMap image(1, 1);
  image.at(0, 0, 0) = 0.25f;
  image.at(0, 0, 1) = 0.5f;
  image.at(0, 0, 2) = 0.75f;
  IuvMap iuv(1, 1);
  iuv.part[0] = 1;
  iuv.u[0] = 0.5f;
  iuv.v[0] = 0.5f;
  auto [tex, mask] = project_to_uv(image, iuv, atlas);
  EXPECT_EQ(mask.sum(), 1.0);
  double sum_r = 0.0;
  for (int y = 0; y < tex.height; ++y)
    for (int x = 0; x < tex.width; ++x)
      if (mask.at(y, x) > 0.0f) {
        EXPECT_FLOAT_EQ(tex.at(y, x, 0), 0.25f);
        EXPECT_FLOAT_EQ(tex.at(y, x, 1), 0.5f);
        EXPECT_FLOAT_EQ(tex.at(y, x, 2), 0.75f);
        sum_r += 1.0;
      }
  EXPECT_EQ(sum_r, 1.0);
}

TEST(ProjectToUv, ExhaustiveIuvCoversUvMask) {
  Atlas atlas = default_atlas(64);
  IuvMap iuv = exhaustive_iuv(atlas);
  TextureMap image(iuv.height, iuv.width, 0.5f);
  auto [tex, mask] = project_to_uv(image, iuv, atlas);
  Mask m_uv = atlas.uv_mask();
  ASSERT_EQ(mask.data.size(), m_uv.data.size());
  for (std::size_t i = 0; i < mask.data.size(); ++i) EXPECT_EQ(mask.data[i], m_uv.data[i]) << i;
}

TEST(ProjectToUv, RejectsMismatchedResolutions) {
  Atlas atlas = default_atlas(64);
  TextureMap image(8, 8);
  IuvMap iuv(4, 4);
  EXPECT_THROW(project_to_uv(image, iuv, atlas), std::invalid_argument);
}

TEST(ProjectToUv, RejectsOutOfRangePart) {
  Atlas atlas = default_atlas(64);
  TextureMap image(1, 1);
  IuvMap iuv(1, 1);
  iuv.part[0] = 25;
  EXPECT_THROW(project_to_uv(image, iuv, atlas), std::out_of_range);
}

TEST(ProjectToUv, CollidingWritesAverage) {
  Atlas atlas = default_atlas(64);
  TextureMap image(1, 2);
  image.at(0, 0, 0) = 0.2f;
  image.at(0, 1, 0) = 0.8f;
  IuvMap iuv(1, 2);
  for (int i = 0; i < 2; ++i) {
    iuv.part[static_cast<std::size_t>(i)] = 3;
    iuv.u[static_cast<std::size_t>(i)] = 0.0f;
    iuv.v[static_cast<std::size_t>(i)] = 0.0f;
  }
  auto [tex, mask] = project_to_uv(image, iuv, atlas);
  EXPECT_EQ(mask.sum(), 1.0);
  const PartRect& r = atlas.rect(3);
  EXPECT_FLOAT_EQ(tex.at(r.y0, r.x0, 0), 0.5f);
}

TEST(MirrorTexture, Involution) {
  Atlas atlas = default_atlas(64);
  Rng rng(7);
  Mask m_uv = atlas.uv_mask();
  TextureMap t = random_texture(64, rng);
  // restrict content to the UV support so nothing lives in the margins
  t = mask_ground_truth(t, m_uv);
  Mask m = m_uv;
  auto [t1, m1] = mirror_texture(t, m, atlas);
  auto [t2, m2] = mirror_texture(t1, m1, atlas);
  EXPECT_EQ(t.data, t2.data);
  EXPECT_EQ(m.data, m2.data);
}

TEST(MirrorTexture, SymmetricTextureIsFixedPoint) {
  Atlas atlas = default_atlas(64);
  Rng rng(9);
  Mask m_uv = atlas.uv_mask();
  TextureMap t = mask_ground_truth(random_texture(64, rng), m_uv);
  auto [tm, mm] = mirror_texture(t, m_uv, atlas);
  TextureMap sym(64, 64);
  for (std::size_t i = 0; i < sym.data.size(); ++i) sym.data[i] = 0.5f * (t.data[i] + tm.data[i]);
  auto [sym2, m2] = mirror_texture(sym, m_uv, atlas);
  for (std::size_t i = 0; i < sym.data.size(); ++i)
    EXPECT_NEAR(sym.data[i], sym2.data[i], 1e-6f);
}

TEST(MirrorTexture, LeftArmMapsToRightArmSameCount) {
  Atlas atlas = default_atlas(64);
  // part 15 is an arm part; its mirror partner is 16
  Mask m(64, 64);
  const PartRect& r15 = atlas.rect(15);
  for (int y = r15.y0; y < r15.y0 + r15.h; ++y)
    for (int x = r15.x0; x < r15.x0 + r15.w; ++x) m.at(y, x) = 1.0f;
  TextureMap t(64, 64);
  auto [tm, mm] = mirror_texture(t, m, atlas);
  EXPECT_EQ(mm.sum(), m.sum());
  const PartRect& r16 = atlas.rect(16);
  double inside = 0.0;
  for (int y = r16.y0; y < r16.y0 + r16.h; ++y)
    for (int x = r16.x0; x < r16.x0 + r16.w; ++x) inside += mm.at(y, x);
  EXPECT_EQ(inside, mm.sum());
}

TEST(ComposeSymmetric, FullMaskKeepsSource) {
  Rng rng(3);
  TextureMap t_src = random_texture(8, rng);
  TextureMap t_mirror = random_texture(8, rng);
  Mask m(8, 8, 1.0f);
  TextureMap out = compose_symmetric(t_src, m, t_mirror);
  EXPECT_EQ(out.data, t_src.data);
}

TEST(ComposeSymmetric, EmptyMaskKeepsMirror) {
  Rng rng(4);
  TextureMap t_src(8, 8);  // pre: zero where mask is zero
  TextureMap t_mirror = random_texture(8, rng);
  Mask m(8, 8, 0.0f);
  TextureMap out = compose_symmetric(t_src, m, t_mirror);
  EXPECT_EQ(out.data, t_mirror.data);
}

TEST(ComposeSymmetric, MatchesPerTexelOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Mask m = random_binary_mask(8, rng);
    TextureMap t_src = mask_ground_truth(random_texture(8, rng), m);
    TextureMap t_mirror = random_texture(8, rng);
    TextureMap out = compose_symmetric(t_src, m, t_mirror);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 3; ++c) {
          float expected = t_src.at(y, x, c) + t_mirror.at(y, x, c) * (1.0f - m.at(y, x));
          EXPECT_NEAR(out.at(y, x, c), expected, 1e-6f);
        }
  }
}

TEST(MaskGroundTruth, CheckerboardKeepsCheckerboard) {
  Rng rng(6);
  TextureMap t = random_texture(8, rng);
  Mask m(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) m.at(y, x) = (x + y) % 2 == 0 ? 1.0f : 0.0f;
  TextureMap out = mask_ground_truth(t, m);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c)
        EXPECT_NEAR(out.at(y, x, c), t.at(y, x, c) * m.at(y, x), 1e-6f);
}

TEST(OcclusionMask, Arithmetic) {
  Rng rng(8);
  Mask m_uv = random_binary_mask(8, rng, 0.8);
  Mask m_src(8, 8);
  for (std::size_t i = 0; i < m_src.data.size(); ++i)
    m_src.data[i] = m_uv.data[i] > 0.0f && rng.bernoulli(0.5) ? 1.0f : 0.0f;
  Mask occ = occlusion_mask(m_uv, m_src);
  EXPECT_DOUBLE_EQ(occ.sum(), m_uv.sum() - m_src.sum());
  // complement identity
  for (std::size_t i = 0; i < occ.data.size(); ++i)
    EXPECT_EQ(occ.data[i] + m_src.data[i], m_uv.data[i]);
  // src == uv gives zero; src == 0 gives uv
  EXPECT_EQ(occlusion_mask(m_uv, m_uv).sum(), 0.0);
  EXPECT_EQ(occlusion_mask(m_uv, Mask(8, 8)).data, m_uv.data);
}

TEST(RegionPartition, DisjointCoverOfUvMask) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  RegionPartition part = build_region_partition(m_uv, atlas);
  Mask acc(64, 64);
  for (int i = 0; i < kNumRegions; ++i)
    for (std::size_t k = 0; k < acc.data.size(); ++k) {
      if (part.masks[static_cast<std::size_t>(i)].data[k] > 0.0f) {
        EXPECT_EQ(acc.data[k], 0.0f) << "regions overlap at " << k;
        acc.data[k] = 1.0f;
      }
    }
  EXPECT_EQ(acc.data, m_uv.data);
}

TEST(RegionPartition, TightBoundingBoxes) {
  Atlas atlas = default_atlas(64);
  Mask m_uv = atlas.uv_mask();
  RegionPartition part = build_region_partition(m_uv, atlas);
  for (int i = 0; i < kNumRegions; ++i) {
    const Mask& m = part.masks[static_cast<std::size_t>(i)];
    const BBox& b = part.boxes[static_cast<std::size_t>(i)];
    ASSERT_FALSE(b.empty());
    BBox tight;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (m.at(y, x) > 0.0f) tight.expand(x, y);
    EXPECT_EQ(b.x0, tight.x0);
    EXPECT_EQ(b.x1, tight.x1);
    EXPECT_EQ(b.y0, tight.y0);
    EXPECT_EQ(b.y1, tight.y1);
  }
}

TEST(RegionPartition, ExpectedWeights) {
  auto w = region_weights();
  EXPECT_EQ(w[static_cast<int>(Region::Head)], 6.0f);
  for (int i = 1; i < kNumRegions; ++i) EXPECT_EQ(w[static_cast<std::size_t>(i)], 1.0f);
}

TEST(MirrorTable, DefaultIsInvolutive) {
  Atlas atlas = default_atlas(256);
  EXPECT_TRUE(atlas.mirror_table.involutive());
}

TEST(ProjectToUv, RoundTripOnExhaustiveIuv) {
  // re-projecting the rendering of its own output reproduces the mask
  Atlas atlas = default_atlas(64);
  IuvMap iuv = exhaustive_iuv(atlas);
  Rng rng(11);
  TextureMap image(iuv.height, iuv.width);
  for (auto& v : image.data) v = rng.uniform();
  auto [tex, mask] = project_to_uv(image, iuv, atlas);
  // render back to image space through the same iuv, then re-project
  TextureMap rendered(iuv.height, iuv.width);
  for (int y = 0; y < iuv.height; ++y)
    for (int x = 0; x < iuv.width; ++x) {
      std::size_t i = iuv.idx(y, x);
      if (iuv.part[i] == 0) continue;
      const PartRect& r = atlas.rect(iuv.part[i]);
      int tx = r.x0 + static_cast<int>(std::lround(iuv.u[i] * (r.w - 1)));
      int ty = r.y0 + static_cast<int>(std::lround(iuv.v[i] * (r.h - 1)));
      for (int c = 0; c < 3; ++c) rendered.at(y, x, c) = tex.at(ty, tx, c);
    }
  auto [tex2, mask2] = project_to_uv(rendered, iuv, atlas);
  EXPECT_EQ(mask.data, mask2.data);
  for (std::size_t i = 0; i < tex.data.size(); ++i) EXPECT_NEAR(tex.data[i], tex2.data[i], 1e-6f);
}
