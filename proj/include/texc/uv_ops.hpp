#pragma once

// Deterministic UV-space geometry: projecting an image into UV space,
// semantic mirroring, symmetric composition, masking, and the six-region
// partition used by the losses and the augmentation.

#include <algorithm>
#include <array>
#include <stdexcept>

#include "texc/atlas.hpp"
#include "texc/uv_types.hpp"

namespace texc {

/// Axis-aligned bounding box in texel coordinates, half-open on neither end.
struct BBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0

  bool empty() const { return x1 < x0 || y1 < y0; }
  int width() const { return empty() ? 0 : x1 - x0 + 1; }
  int height() const { return empty() ? 0 : y1 - y0 + 1; }

  void expand(int x, int y) {
    if (empty()) {
      x0 = x1 = x;
      y0 = y1 = y;
    } else {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
};

/// Six disjoint region masks covering M_uv, with loss weights and tight
/// bounding boxes.
struct RegionPartition {
  std::array<Mask, kNumRegions> masks;
  std::array<float, kNumRegions> weights = region_weights();
  std::array<BBox, kNumRegions> boxes;
};

/// Projects every foreground image pixel into the UV square. Colliding
/// writes are averaged; (u,v) address the nearest texel of the part rect.
inline std::pair<TextureMap, Mask> project_to_uv(const TextureMap& image, const IuvMap& iuv,
                                                 const Atlas& atlas) {
  if (image.height != iuv.height || image.width != iuv.width)
    throw std::invalid_argument("project_to_uv: image/iuv resolution mismatch");
  TextureMap tex(atlas.size, atlas.size);
  Mask mask(atlas.size, atlas.size);
  std::vector<int> hits(static_cast<std::size_t>(atlas.size) * atlas.size, 0);

  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      std::size_t i = iuv.idx(y, x);
      int p = iuv.part[i];
      if (p == 0) continue;
      const PartRect& r = atlas.rect(p);  // throws on out-of-range part
      int tx = r.x0 + static_cast<int>(std::lround(iuv.u[i] * static_cast<float>(r.w - 1)));
      int ty = r.y0 + static_cast<int>(std::lround(iuv.v[i] * static_cast<float>(r.h - 1)));
      for (int c = 0; c < 3; ++c) tex.at(ty, tx, c) += image.at(y, x, c);
      ++hits[static_cast<std::size_t>(ty) * atlas.size + tx];
    }
  }
  for (int y = 0; y < atlas.size; ++y) {
    for (int x = 0; x < atlas.size; ++x) {
      int n = hits[static_cast<std::size_t>(y) * atlas.size + x];
      if (n == 0) continue;
      for (int c = 0; c < 3; ++c) tex.at(y, x, c) /= static_cast<float>(n);
      mask.at(y, x) = 1.0f;
    }
  }
  return {tex, mask};
}

/// Copies each part's texels into its mirrored part's rectangle, flipping u
/// where the table says so. Texels outside all part rects drop to zero.
inline std::pair<TextureMap, Mask> mirror_texture(const TextureMap& t, const Mask& m,
                                                  const Atlas& atlas) {
  if (t.height != atlas.size || t.width != atlas.size || !m.same_shape(Mask(t.height, t.width)))
    throw std::invalid_argument("mirror_texture: resolution mismatch");
  const MirrorTable& table = atlas.mirror_table;
  TextureMap out(t.height, t.width);
  Mask out_m(t.height, t.width);
  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    const PartRect& src = atlas.rect(p);
    const PartRect& dst = atlas.rect(table.mirror[static_cast<std::size_t>(p)]);
    if (src.w != dst.w || src.h != dst.h)
      throw std::invalid_argument("mirror_texture: pair rects differ in size");
    bool flip = table.flip_u[static_cast<std::size_t>(p)];
    for (int y = 0; y < src.h; ++y) {
      for (int x = 0; x < src.w; ++x) {
        int dx = flip ? (src.w - 1 - x) : x;
        for (int c = 0; c < 3; ++c)
          out.at(dst.y0 + y, dst.x0 + dx, c) = t.at(src.y0 + y, src.x0 + x, c);
        out_m.at(dst.y0 + y, dst.x0 + dx) = m.at(src.y0 + y, src.x0 + x);
      }
    }
  }
  return {out, out_m};
}

/// T_input = T_source + T_mirror o (1 - M_source), texel-wise.
inline TextureMap compose_symmetric(const TextureMap& t_src, const Mask& m_src,
                                    const TextureMap& t_mirror) {
  if (!t_src.same_shape(t_mirror) || t_src.height != m_src.height || t_src.width != m_src.width)
    throw std::invalid_argument("compose_symmetric: shape mismatch");
  TextureMap out(t_src.height, t_src.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      float keep = 1.0f - m_src.at(y, x);
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = t_src.at(y, x, c) + t_mirror.at(y, x, c) * keep;
    }
  return out;
}

/// T_GT^M = T_GT o M_source.
inline TextureMap mask_ground_truth(const TextureMap& t_gt, const Mask& m_src) {
  if (t_gt.height != m_src.height || t_gt.width != m_src.width)
    throw std::invalid_argument("mask_ground_truth: shape mismatch");
  TextureMap out(t_gt.height, t_gt.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = t_gt.at(y, x, c) * m_src.at(y, x);
  return out;
}

/// M_occ = max(M_uv - M_source, 0): texels valid in UV space but unobserved.
inline Mask occlusion_mask(const Mask& m_uv, const Mask& m_src) {
  if (!m_uv.same_shape(m_src)) throw std::invalid_argument("occlusion_mask: shape mismatch");
  Mask out(m_uv.height, m_uv.width);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = std::max(m_uv.data[i] - m_src.data[i], 0.0f);
  return out;
}

inline RegionPartition build_region_partition(const Mask& m_uv, const Atlas& atlas) {
  if (m_uv.height != atlas.size || m_uv.width != atlas.size)
    throw std::invalid_argument("build_region_partition: mask/atlas size mismatch");
  RegionPartition part;
  for (auto& m : part.masks) m = Mask(atlas.size, atlas.size);
  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    int g = static_cast<int>(atlas.group[static_cast<std::size_t>(p)]);
    if (g < 0 || g >= kNumRegions)
      throw std::invalid_argument("build_region_partition: part not assigned to a region");
    const PartRect& r = atlas.rect(p);
    Mask& rm = part.masks[static_cast<std::size_t>(g)];
    for (int y = r.y0; y < r.y0 + r.h; ++y)
      for (int x = r.x0; x < r.x0 + r.w; ++x)
        if (m_uv.at(y, x) != 0.0f) {
          rm.at(y, x) = 1.0f;
          part.boxes[static_cast<std::size_t>(g)].expand(x, y);
        }
  }
  return part;
}

}  // namespace texc
