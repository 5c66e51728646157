#pragma once

// Region-wise TPS deformation of partial ground-truth textures, the
// curriculum alpha schedule, and photometric jitter.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "texc/rng.hpp"
#include "texc/tps.hpp"
#include "texc/uv_ops.hpp"

namespace texc {

struct AugmentConfig {
  float p_aug = 0.8f;        // probability a training example gets warped
  int control_grid = 4;      // control points per axis, per region
  int bbox_padding = 4;      // texels added around each region's tight bbox
  float jitter_prob = 0.5f;  // probability of color jitter (refiner training)

  void validate() const {
    if (p_aug < 0.0f || p_aug > 1.0f) throw std::invalid_argument("p_aug outside [0,1]");
    if (jitter_prob < 0.0f || jitter_prob > 1.0f) throw std::invalid_argument("jitter_prob outside [0,1]");
    if (control_grid < 2) throw std::invalid_argument("control_grid < 2");
  }
};

/// alpha(step) = 0 at step 0, 0.1 + step*delta afterwards.
inline float alpha_schedule(int step, float delta) {
  if (step < 0) throw std::invalid_argument("alpha_schedule: negative step");
  if (delta < 0.0f) throw std::invalid_argument("alpha_schedule: negative delta");
  return step == 0 ? 0.0f : 0.1f + static_cast<float>(step) * delta;
}

inline BBox pad_bbox(const BBox& box, int pad, int height, int width) {
  if (box.empty()) return box;
  BBox out;
  out.x0 = std::max(box.x0 - pad, 0);
  out.y0 = std::max(box.y0 - pad, 0);
  out.x1 = std::min(box.x1 + pad, width - 1);
  out.y1 = std::min(box.y1 + pad, height - 1);
  return out;
}

/// Warps each of the six regions independently through a TPS whose control
/// points sit on a regular grid over the padded region bbox, each shifted by
/// a sign-randomized draw from U(0,alpha) per axis (normalized bbox units).
/// The warped regions are merged and multiplied by M_uv. alpha = 0 is the
/// identity, texel-exact.
inline TextureMap region_wise_augment(const TextureMap& t, const RegionPartition& partition,
                                      const Mask& m_uv, float alpha, Rng& rng,
                                      const AugmentConfig& cfg = {}) {
  if (alpha < 0.0f) throw std::invalid_argument("region_wise_augment: negative alpha");
  if (alpha == 0.0f) return t;

  const int g = cfg.control_grid;
  TextureMap merged(t.height, t.width);
  for (int ri = 0; ri < kNumRegions; ++ri) {
    const Mask& rm = partition.masks[static_cast<std::size_t>(ri)];
    BBox box = pad_bbox(partition.boxes[static_cast<std::size_t>(ri)], cfg.bbox_padding, t.height,
                        t.width);
    if (box.empty()) continue;

    std::vector<Point2> src, dst;
    src.reserve(static_cast<std::size_t>(g) * g);
    dst.reserve(static_cast<std::size_t>(g) * g);
    for (int iy = 0; iy < g; ++iy)
      for (int ix = 0; ix < g; ++ix) {
        Point2 p{static_cast<float>(ix) / static_cast<float>(g - 1),
                 static_cast<float>(iy) / static_cast<float>(g - 1)};
        src.push_back(p);
        float dx = rng.sign() * rng.uniform(0.0f, alpha);
        float dy = rng.sign() * rng.uniform(0.0f, alpha);
        dst.push_back({p.x + dx, p.y + dy});
      }
    TpsTransform tps = TpsTransform::fit(src, dst);

    TextureMap crop = mask_ground_truth(t, rm);
    TextureMap warped = warp_region(crop, rm, box, tps);
    for (std::size_t i = 0; i < merged.data.size(); ++i) merged.data[i] += warped.data[i];
  }

  for (int y = 0; y < merged.height; ++y)
    for (int x = 0; x < merged.width; ++x) {
      float m = m_uv.at(y, x);
      for (int c = 0; c < 3; ++c) merged.at(y, x, c) *= m;
    }
  return merged;
}

struct JitterParams {
  float brightness = 0.0f;  // additive
  float contrast = 1.0f;    // multiplicative around 0.5
  float hue = 0.0f;         // shift in [0,1) hue turns
};

inline JitterParams draw_jitter(Rng& rng) {
  JitterParams p;
  p.brightness = rng.uniform(-0.1f, 0.1f);
  p.contrast = rng.uniform(0.9f, 1.1f);
  p.hue = rng.uniform(-0.05f, 0.05f);
  return p;
}

namespace detail {

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  float d = mx - mn;
  s = mx > 0.0f ? d / mx : 0.0f;
  if (d == 0.0f) {
    h = 0.0f;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0f) / 6.0f;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0f) / 6.0f;
  } else {
    h = ((r - g) / d + 4.0f) / 6.0f;
  }
  if (h < 0.0f) h += 1.0f;
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  float hh = std::fmod(h, 1.0f);
  if (hh < 0.0f) hh += 1.0f;
  hh *= 6.0f;
  int i = static_cast<int>(hh) % 6;
  float f = hh - std::floor(hh);
  float p = v * (1.0f - s);
  float q = v * (1.0f - s * f);
  float t = v * (1.0f - s * (1.0f - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace detail

inline TextureMap apply_jitter(const TextureMap& t, const JitterParams& p) {
  TextureMap out(t.height, t.width);
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x) {
      float rgb[3];
      for (int c = 0; c < 3; ++c)
        rgb[c] = (t.at(y, x, c) - 0.5f) * p.contrast + 0.5f + p.brightness;
      if (p.hue != 0.0f) {
        float h, s, v;
        detail::rgb_to_hsv(std::clamp(rgb[0], 0.0f, 1.0f), std::clamp(rgb[1], 0.0f, 1.0f),
                           std::clamp(rgb[2], 0.0f, 1.0f), h, s, v);
        detail::hsv_to_rgb(h + p.hue, s, v, rgb[0], rgb[1], rgb[2]);
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = std::clamp(rgb[c], 0.0f, 1.0f);
    }
  return out;
}

inline TextureMap color_jitter(const TextureMap& t, Rng& rng) {
  return apply_jitter(t, draw_jitter(rng));
}

}  // namespace texc
