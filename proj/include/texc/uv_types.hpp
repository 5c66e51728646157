#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace texc {

/// Square RGB texture in canonical UV space, values in [0,1], HWC layout.
struct TextureMap {
  int height = 0;
  int width = 0;
  std::vector<float> data;  // height*width*3

  TextureMap() = default;
  TextureMap(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool same_shape(const TextureMap& o) const {
    return height == o.height && width == o.width;
  }

  void clamp01() {
    for (float& v : data) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
};

/// Single-channel mask at texture resolution; binary unless stated.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<float> data;  // height*width

  Mask() = default;
  Mask(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const Mask& o) const { return height == o.height && width == o.width; }

  double sum() const {
    double s = 0.0;
    for (float v : data) s += v;
    return s;
  }

  bool is_binary() const {
    for (float v : data)
      if (v != 0.0f && v != 1.0f) return false;
    return true;
  }
};

/// Per-image-pixel (part index, u, v) correspondence into the UV space.
/// Part index 0 is background; foreground parts are 1..24.
struct IuvMap {
  static constexpr int kNumParts = 24;

  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> part;  // height*width
  std::vector<float> u;            // height*width, in [0,1]
  std::vector<float> v;            // height*width, in [0,1]

  IuvMap() = default;
  IuvMap(int h, int w)
      : height(h),
        width(w),
        part(static_cast<std::size_t>(h) * w, 0),
        u(static_cast<std::size_t>(h) * w, 0.0f),
        v(static_cast<std::size_t>(h) * w, 0.0f) {}

  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
};

inline int num_fractional(const Mask& m) {
  int n = 0;
  for (float v : m.data)
    if (v != 0.0f && v != 1.0f) ++n;
  return n;
}

}  // namespace texc
