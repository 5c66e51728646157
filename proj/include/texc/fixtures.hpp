#pragma once

// Synthetic fixture generation: procedural ground-truth textures, per-region
// visibility masks, smooth unit normal maps, an exhaustive-coverage IUV map,
// optional dense-pose-like partial textures, and a manifest.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "texc/atlas.hpp"
#include "texc/augment.hpp"
#include "texc/image_io.hpp"
#include "texc/rng.hpp"
#include "texc/uv_ops.hpp"

namespace texc {

struct FixtureSpec {
  int count = 10;
  int resolution = 256;
  int densepose_count = 0;  // 0 disables the densepose/ directory
  std::uint64_t seed = 1;
  // per-region visibility mode probabilities; remainder is "fully visible"
  float p_halfplane = 0.25f;
  float p_hidden = 0.25f;
  // mirror-symmetric ground truth (overfit smoke runs)
  bool mirror_symmetric = false;
};

namespace detail {

inline TextureMap procedural_texture(int size, const Mask& m_uv, Rng& rng) {
  TextureMap t(size, size);
  int kind = rng.uniform_int(0, 2);
  float base[3] = {rng.uniform(0.1f, 0.9f), rng.uniform(0.1f, 0.9f), rng.uniform(0.1f, 0.9f)};
  float alt[3] = {rng.uniform(0.1f, 0.9f), rng.uniform(0.1f, 0.9f), rng.uniform(0.1f, 0.9f)};
  if (kind == 0) {
    // stripes
    float freq = rng.uniform(0.05f, 0.3f);
    float angle = rng.uniform(0.0f, 3.14159f);
    float cs = std::cos(angle), sn = std::sin(angle);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        float s = 0.5f + 0.5f * std::sin((cs * x + sn * y) * freq * 6.28318f);
        for (int c = 0; c < 3; ++c) t.at(y, x, c) = base[c] * s + alt[c] * (1.0f - s);
      }
  } else if (kind == 1) {
    // color blocks
    int bs = rng.uniform_int(8, std::max(9, size / 8));
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        bool odd = ((y / bs) + (x / bs)) % 2 != 0;
        for (int c = 0; c < 3; ++c) t.at(y, x, c) = odd ? base[c] : alt[c];
      }
  } else {
    // smooth gradient
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        float fy = static_cast<float>(y) / static_cast<float>(size - 1);
        float fx = static_cast<float>(x) / static_cast<float>(size - 1);
        for (int c = 0; c < 3; ++c) t.at(y, x, c) = base[c] * fx + alt[c] * fy * (1.0f - fx);
      }
  }
  // a few high-frequency "logo" patches
  int logos = rng.uniform_int(1, 3);
  for (int l = 0; l < logos; ++l) {
    int ps = rng.uniform_int(6, std::max(7, size / 16));
    int y0 = rng.uniform_int(0, size - ps - 1);
    int x0 = rng.uniform_int(0, size - ps - 1);
    for (int y = 0; y < ps; ++y)
      for (int x = 0; x < ps; ++x) {
        float v = ((x + y) % 2 == 0) ? 1.0f : 0.0f;
        for (int c = 0; c < 3; ++c) t.at(y0 + y, x0 + x, c) = v;
      }
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      float m = m_uv.at(y, x);
      for (int c = 0; c < 3; ++c) t.at(y, x, c) *= m;
    }
  t.clamp01();
  return t;
}

/// Per-region visibility: each region is fully visible, cut by a random
/// half-plane, or hidden. The result is binary and a subset of M_uv.
inline Mask visibility_mask(const Atlas& atlas, const Mask& m_uv, Rng& rng,
                            float p_halfplane = 0.25f, float p_hidden = 0.25f) {
  Mask m(atlas.size, atlas.size);
  RegionPartition part = build_region_partition(m_uv, atlas);
  for (int ri = 0; ri < kNumRegions; ++ri) {
    const Mask& rm = part.masks[static_cast<std::size_t>(ri)];
    const BBox& box = part.boxes[static_cast<std::size_t>(ri)];
    if (box.empty()) continue;
    float u = rng.uniform();
    int mode = u < p_hidden ? 3 : (u < p_hidden + p_halfplane ? 2 : 0);
    float nx = 0, ny = 0, d = 0;
    if (mode == 2) {
      float theta = rng.uniform(0.0f, 6.28318f);
      nx = std::cos(theta);
      ny = std::sin(theta);
      float cx = 0.5f * static_cast<float>(box.x0 + box.x1);
      float cy = 0.5f * static_cast<float>(box.y0 + box.y1);
      d = nx * cx + ny * cy + rng.uniform(-0.2f, 0.2f) * static_cast<float>(box.width());
    }
    if (mode == 3) continue;
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x) {
        if (rm.at(y, x) == 0.0f) continue;
        if (mode == 2 && nx * static_cast<float>(x) + ny * static_cast<float>(y) < d) continue;
        m.at(y, x) = 1.0f;
      }
  }
  return m;
}

inline TextureMap normal_map(int size, Rng& rng) {
  TextureMap n(size, size);
  float fx = rng.uniform(0.5f, 2.0f), fy = rng.uniform(0.5f, 2.0f);
  float phase = rng.uniform(0.0f, 6.28318f);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      float u = static_cast<float>(x) / static_cast<float>(size);
      float v = static_cast<float>(y) / static_cast<float>(size);
      float a = 0.6f * std::sin(fx * 6.28318f * u + phase);
      float b = 0.6f * std::sin(fy * 6.28318f * v);
      float nz = std::sqrt(std::max(1.0f - a * a - b * b, 0.05f));
      float len = std::sqrt(a * a + b * b + nz * nz);
      n.at(y, x, 0) = (a / len + 1.0f) * 0.5f;
      n.at(y, x, 1) = (b / len + 1.0f) * 0.5f;
      n.at(y, x, 2) = (nz / len + 1.0f) * 0.5f;
    }
  return n;
}

}  // namespace detail

/// One image pixel per texel of every part; re-projecting it covers M_uv
/// exactly once.
inline IuvMap exhaustive_iuv(const Atlas& atlas) {
  std::int64_t total = 0;
  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    const PartRect& r = atlas.rect(p);
    total += static_cast<std::int64_t>(r.w) * r.h;
  }
  int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(total))));
  IuvMap iuv(side, side);
  std::int64_t k = 0;
  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    const PartRect& r = atlas.rect(p);
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x, ++k) {
        std::size_t i = static_cast<std::size_t>(k);
        iuv.part[i] = static_cast<std::uint8_t>(p);
        iuv.u[i] = r.w > 1 ? static_cast<float>(x) / static_cast<float>(r.w - 1) : 0.0f;
        iuv.v[i] = r.h > 1 ? static_cast<float>(y) / static_cast<float>(r.h - 1) : 0.0f;
      }
  }
  return iuv;
}

inline std::string sample_id(int i) {
  std::ostringstream s;
  s << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

/// Writes textures/, masks/, normals/, optional densepose/, the atlas, the
/// exhaustive IUV, and a manifest under `out_dir`. Regeneration with the
/// same spec and seed is file-identical.
inline void generate_fixtures(const FixtureSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  Rng rng(spec.seed);
  Atlas atlas = default_atlas(spec.resolution);
  Mask m_uv = atlas.uv_mask();
  RegionPartition part = build_region_partition(m_uv, atlas);

  fs::create_directories(fs::path(out_dir) / "textures");
  fs::create_directories(fs::path(out_dir) / "masks");
  fs::create_directories(fs::path(out_dir) / "normals");
  if (spec.densepose_count > 0) fs::create_directories(fs::path(out_dir) / "densepose");

  write_atlas((fs::path(out_dir) / "atlas.txt").string(), atlas);
  write_iuv((fs::path(out_dir) / "exhaustive_iuv.ppm").string(), exhaustive_iuv(atlas));

  std::ofstream manifest((fs::path(out_dir) / "manifest.txt").string());
  manifest << "# id texture mask normal [densepose_texture densepose_mask]\n";
  for (int i = 0; i < spec.count; ++i) {
    std::string id = sample_id(i);
    TextureMap gt = detail::procedural_texture(spec.resolution, m_uv, rng);
    if (spec.mirror_symmetric) {
      auto [gm, mm] = mirror_texture(gt, m_uv, atlas);
      for (std::size_t k = 0; k < gt.data.size(); ++k)
        gt.data[k] = 0.5f * (gt.data[k] + gm.data[k]);
    }
    Mask vis = detail::visibility_mask(atlas, m_uv, rng, spec.p_halfplane, spec.p_hidden);
    TextureMap normal = detail::normal_map(spec.resolution, rng);
    write_texture((fs::path(out_dir) / "textures" / ("tex_" + id + ".ppm")).string(), gt);
    write_mask((fs::path(out_dir) / "masks" / ("mask_" + id + ".pgm")).string(), vis);
    write_texture((fs::path(out_dir) / "normals" / ("normal_" + id + ".ppm")).string(), normal);
    manifest << id << " textures/tex_" << id << ".ppm masks/mask_" << id
             << ".pgm normals/normal_" << id << ".ppm";
    if (i < spec.densepose_count) {
      // dense-pose-like partial texture: a strongly warped T_GT^M
      TextureMap gtm = mask_ground_truth(gt, vis);
      TextureMap dp = region_wise_augment(gtm, part, m_uv, 0.25f, rng);
      dp.clamp01();
      write_texture((fs::path(out_dir) / "densepose" / ("dp_" + id + ".ppm")).string(), dp);
      write_mask((fs::path(out_dir) / "densepose" / ("dpmask_" + id + ".pgm")).string(), vis);
      manifest << " densepose/dp_" << id << ".ppm densepose/dpmask_" << id << ".pgm";
    }
    manifest << "\n";
  }
  if (!manifest) throw std::runtime_error("manifest write failed");
}

}  // namespace texc
