#pragma once

// Part layout of the UV square. The 24 body parts sit in a 6x4 grid of
// rectangles with a small margin around each cell; mirror pairs share a row
// so their rectangles have identical extents. The layout ships as a
// versioned text fixture (configs/atlas_256.txt) and can be regenerated for
// any resolution with default_atlas().

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "texc/uv_types.hpp"

namespace texc {

enum class Region : int { Head = 0, Body = 1, Legs = 2, Arms = 3, Feet = 4, Hands = 5 };
constexpr int kNumRegions = 6;

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Head: return "head";
    case Region::Body: return "body";
    case Region::Legs: return "legs";
    case Region::Arms: return "arms";
    case Region::Feet: return "feet";
    case Region::Hands: return "hands";
  }
  throw std::logic_error("bad region");
}

inline Region region_from_name(const std::string& s) {
  for (int i = 0; i < kNumRegions; ++i)
    if (s == region_name(static_cast<Region>(i))) return static_cast<Region>(i);
  throw std::runtime_error("unknown region name: " + s);
}

/// Loss weights per region, (face/head, body, leg, arm, foot, hand).
inline std::array<float, kNumRegions> region_weights() {
  return {6.0f, 1.0f, 1.0f, 1.0f, 1.0f, 1.0f};
}

struct PartRect {
  int x0 = 0, y0 = 0, w = 0, h = 0;
};

/// Part-index -> mirrored-part-index map plus per-part u-flip rule.
/// Applying the table twice is the identity.
struct MirrorTable {
  std::array<int, IuvMap::kNumParts + 1> mirror{};   // 1-based, [0] unused
  std::array<bool, IuvMap::kNumParts + 1> flip_u{};  // 1-based

  bool involutive() const {
    for (int p = 1; p <= IuvMap::kNumParts; ++p) {
      int q = mirror[static_cast<std::size_t>(p)];
      if (q < 1 || q > IuvMap::kNumParts) return false;
      if (mirror[static_cast<std::size_t>(q)] != p) return false;
      if (flip_u[static_cast<std::size_t>(p)] != flip_u[static_cast<std::size_t>(q)]) return false;
    }
    return true;
  }
};

struct Atlas {
  int size = 0;  // texture is size x size
  std::array<PartRect, IuvMap::kNumParts + 1> rects{};   // 1-based
  std::array<Region, IuvMap::kNumParts + 1> group{};     // 1-based
  MirrorTable mirror_table;

  const PartRect& rect(int part) const {
    if (part < 1 || part > IuvMap::kNumParts)
      throw std::out_of_range("part index out of range: " + std::to_string(part));
    return rects[static_cast<std::size_t>(part)];
  }

  Mask uv_mask() const {
    Mask m(size, size);
    for (int p = 1; p <= IuvMap::kNumParts; ++p) {
      const PartRect& r = rects[static_cast<std::size_t>(p)];
      for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x) m.at(y, x) = 1.0f;
    }
    return m;
  }
};

/// Fixed layout: part p occupies grid cell p-1 (row-major, 4 columns).
/// Grouping follows the usual dense-pose indexing: 1,2 torso; 3,4 hands;
/// 5,6 feet; 7-14 legs; 15-22 arms; 23,24 head. Mirror pairs (3,4), (5,6),
/// ..., (23,24); torso halves 1 and 2 mirror onto themselves. Every part
/// flips u under mirroring.
inline Atlas default_atlas(int size) {
  if (size < 48) throw std::invalid_argument("atlas size too small (min 48)");
  Atlas a;
  a.size = size;
  // 2-texel margin per cell keeps rects of adjacent parts >= 4 texels apart,
  // so the 4-texel padded boxes used by the augmentation never cross parts.
  const int margin = 2;
  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    int k = p - 1;
    int row = k / 4, col = k % 4;
    int y0 = row * size / 6, y1 = (row + 1) * size / 6;
    int x0 = col * size / 4, x1 = (col + 1) * size / 4;
    a.rects[static_cast<std::size_t>(p)] = {x0 + margin, y0 + margin,
                                            (x1 - x0) - 2 * margin, (y1 - y0) - 2 * margin};
  }
  auto assign = [&](int lo, int hi, Region r) {
    for (int p = lo; p <= hi; ++p) a.group[static_cast<std::size_t>(p)] = r;
  };
  assign(1, 2, Region::Body);
  assign(3, 4, Region::Hands);
  assign(5, 6, Region::Feet);
  assign(7, 14, Region::Legs);
  assign(15, 22, Region::Arms);
  assign(23, 24, Region::Head);

  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    a.mirror_table.flip_u[static_cast<std::size_t>(p)] = true;
    if (p <= 2)
      a.mirror_table.mirror[static_cast<std::size_t>(p)] = p;
    else
      a.mirror_table.mirror[static_cast<std::size_t>(p)] = (p % 2 == 1) ? p + 1 : p - 1;
  }
  if (!a.mirror_table.involutive()) throw std::logic_error("default mirror table not involutive");
  return a;
}

inline void write_atlas(const std::string& path, const Atlas& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "texc-atlas v1\n";
  out << "size " << a.size << "\n";
  out << "# part group mirror flip_u x0 y0 w h\n";
  for (int p = 1; p <= IuvMap::kNumParts; ++p) {
    const PartRect& r = a.rects[static_cast<std::size_t>(p)];
    out << "part " << p << " " << region_name(a.group[static_cast<std::size_t>(p)]) << " "
        << a.mirror_table.mirror[static_cast<std::size_t>(p)] << " "
        << (a.mirror_table.flip_u[static_cast<std::size_t>(p)] ? 1 : 0) << " " << r.x0 << " "
        << r.y0 << " " << r.w << " " << r.h << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Atlas read_atlas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "texc-atlas v1")
    throw std::runtime_error("bad atlas header: " + path);
  Atlas a;
  std::vector<bool> seen(IuvMap::kNumParts + 1, false);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "size") {
      ss >> a.size;
    } else if (key == "part") {
      int p, mirror, flip, x0, y0, w, h;
      std::string group;
      ss >> p >> group >> mirror >> flip >> x0 >> y0 >> w >> h;
      if (!ss || p < 1 || p > IuvMap::kNumParts)
        throw std::runtime_error("bad atlas part line: " + line);
      a.rects[static_cast<std::size_t>(p)] = {x0, y0, w, h};
      a.group[static_cast<std::size_t>(p)] = region_from_name(group);
      a.mirror_table.mirror[static_cast<std::size_t>(p)] = mirror;
      a.mirror_table.flip_u[static_cast<std::size_t>(p)] = flip != 0;
      seen[static_cast<std::size_t>(p)] = true;
    } else {
      throw std::runtime_error("unknown atlas key: " + key);
    }
  }
  for (int p = 1; p <= IuvMap::kNumParts; ++p)
    if (!seen[static_cast<std::size_t>(p)]) throw std::runtime_error("atlas missing part " + std::to_string(p));
  if (!a.mirror_table.involutive()) throw std::runtime_error("atlas mirror table not involutive");
  return a;
}

}  // namespace texc
