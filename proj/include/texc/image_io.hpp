#pragma once

// Lossless netpbm I/O. Textures and masks are stored as 8-bit PPM/PGM with
// values mapped linearly to [0,1]; IUV maps are stored as 16-bit PPM where
// channel 0 holds the raw part index, channels 1-2 hold u,v scaled by 65535.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "texc/uv_types.hpp"

namespace texc {

namespace detail {

inline int pnm_next_int(std::istream& in) {
  // skips whitespace and '#' comments between header tokens
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = 0;
  in >> value;
  if (!in) throw std::runtime_error("pnm: malformed header");
  return value;
}

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

inline PnmHeader pnm_read_header(std::istream& in) {
  PnmHeader h;
  in >> h.magic;
  if (h.magic != "P5" && h.magic != "P6") throw std::runtime_error("pnm: unsupported magic");
  h.width = pnm_next_int(in);
  h.height = pnm_next_int(in);
  h.maxval = pnm_next_int(in);
  in.get();  // single whitespace before raster
  return h;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline std::uint8_t quantize8(float v) {
  float x = v * 255.0f + 0.5f;
  if (x < 0.0f) x = 0.0f;
  if (x > 255.0f) x = 255.0f;
  return static_cast<std::uint8_t>(x);
}

inline std::uint16_t quantize16(float v) {
  float x = v * 65535.0f + 0.5f;
  if (x < 0.0f) x = 0.0f;
  if (x > 65535.0f) x = 65535.0f;
  return static_cast<std::uint16_t>(x);
}

}  // namespace detail

inline void write_texture(const std::string& path, const TextureMap& t) {
  auto out = detail::open_out(path);
  out << "P6\n" << t.width << " " << t.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(t.width) * 3);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[static_cast<std::size_t>(x) * 3 + c] = detail::quantize8(t.at(y, x, c));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline TextureMap read_texture(const std::string& path) {
  auto in = detail::open_in(path);
  auto h = detail::pnm_read_header(in);
  if (h.magic != "P6" || h.maxval != 255)
    throw std::runtime_error("expected 8-bit P6 texture: " + path);
  TextureMap t(h.height, h.width);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(h.width) * 3);
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated texture: " + path);
    for (int x = 0; x < h.width; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(y, x, c) = static_cast<float>(row[static_cast<std::size_t>(x) * 3 + c]) / 255.0f;
  }
  return t;
}

inline void write_mask(const std::string& path, const Mask& m) {
  auto out = detail::open_out(path);
  out << "P5\n" << m.width << " " << m.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(m.width));
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) row[static_cast<std::size_t>(x)] = detail::quantize8(m.at(y, x));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Mask read_mask(const std::string& path) {
  auto in = detail::open_in(path);
  auto h = detail::pnm_read_header(in);
  if (h.magic != "P5" || h.maxval != 255)
    throw std::runtime_error("expected 8-bit P5 mask: " + path);
  Mask m(h.height, h.width);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(h.width));
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated mask: " + path);
    for (int x = 0; x < h.width; ++x) m.at(y, x) = static_cast<float>(row[static_cast<std::size_t>(x)]) / 255.0f;
  }
  return m;
}

inline void write_iuv(const std::string& path, const IuvMap& iuv) {
  auto out = detail::open_out(path);
  out << "P6\n" << iuv.width << " " << iuv.height << "\n65535\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(iuv.width) * 6);
  for (int y = 0; y < iuv.height; ++y) {
    for (int x = 0; x < iuv.width; ++x) {
      std::size_t i = iuv.idx(y, x);
      std::uint16_t px[3] = {static_cast<std::uint16_t>(iuv.part[i]),
                             detail::quantize16(iuv.u[i]),
                             detail::quantize16(iuv.v[i])};
      for (int c = 0; c < 3; ++c) {
        row[static_cast<std::size_t>(x) * 6 + c * 2] = static_cast<std::uint8_t>(px[c] >> 8);
        row[static_cast<std::size_t>(x) * 6 + c * 2 + 1] = static_cast<std::uint8_t>(px[c] & 0xff);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline IuvMap read_iuv(const std::string& path) {
  auto in = detail::open_in(path);
  auto h = detail::pnm_read_header(in);
  if (h.magic != "P6" || h.maxval != 65535)
    throw std::runtime_error("expected 16-bit P6 iuv map: " + path);
  IuvMap iuv(h.height, h.width);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(h.width) * 6);
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw std::runtime_error("truncated iuv map: " + path);
    for (int x = 0; x < h.width; ++x) {
      std::uint16_t px[3];
      for (int c = 0; c < 3; ++c)
        px[c] = static_cast<std::uint16_t>((row[static_cast<std::size_t>(x) * 6 + c * 2] << 8) |
                                           row[static_cast<std::size_t>(x) * 6 + c * 2 + 1]);
      std::size_t i = iuv.idx(y, x);
      if (px[0] > IuvMap::kNumParts)
        throw std::runtime_error("iuv part index out of range: " + path);
      iuv.part[i] = static_cast<std::uint8_t>(px[0]);
      iuv.u[i] = static_cast<float>(px[1]) / 65535.0f;
      iuv.v[i] = static_cast<float>(px[2]) / 65535.0f;
    }
  }
  return iuv;
}

}  // namespace texc
