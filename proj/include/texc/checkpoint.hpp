#pragma once

// Versioned binary parameter container: magic + version, run metadata
// (config echo, iteration, seed), then named float blocks. Round-trips are
// bit-exact on parameter data.

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "texc/layers.hpp"
#include "texc/tensor.hpp"

namespace texc::nn {

struct CheckpointMeta {
  std::string config_echo;
  long long iteration = 0;
  std::uint64_t seed = 0;
};

namespace detail {

constexpr char kMagic[8] = {'T', 'E', 'X', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated");
  return v;
}

inline void write_str(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& in) {
  auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace detail

inline void checkpoint_save(const std::string& path, const std::map<std::string, Tensor>& blocks,
                            const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(detail::kMagic, sizeof(detail::kMagic));
  detail::write_pod<std::uint32_t>(out, detail::kVersion);
  detail::write_pod<std::int64_t>(out, meta.iteration);
  detail::write_pod<std::uint64_t>(out, meta.seed);
  detail::write_str(out, meta.config_echo);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, t] : blocks) {
    detail::write_str(out, name);
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) detail::write_pod<std::int32_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline std::map<std::string, Tensor> checkpoint_load(const std::string& path,
                                                     CheckpointMeta& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  auto version = detail::read_pod<std::uint32_t>(in);
  if (version != detail::kVersion)
    throw std::runtime_error("checkpoint version mismatch: have " + std::to_string(version) +
                             ", expected " + std::to_string(detail::kVersion));
  meta.iteration = detail::read_pod<std::int64_t>(in);
  meta.seed = detail::read_pod<std::uint64_t>(in);
  meta.config_echo = detail::read_str(in);
  auto count = detail::read_pod<std::uint32_t>(in);
  std::map<std::string, Tensor> blocks;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = detail::read_str(in);
    auto ndims = detail::read_pod<std::uint32_t>(in);
    std::vector<int> shape(ndims);
    for (auto& d : shape) d = detail::read_pod<std::int32_t>(in);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated block " + name);
    blocks.emplace(std::move(name), std::move(t));
  }
  return blocks;
}

/// Collects a ParamStore into named blocks, optionally under a prefix
/// (e.g. "disc/" for the discriminator).
inline void collect_params(const ParamStore& ps, const std::string& prefix,
                           std::map<std::string, Tensor>& blocks) {
  for (const auto& [name, v] : ps.all()) blocks.emplace(prefix + name, v.value());
}

/// Restores a ParamStore from blocks; every parameter must be present with a
/// matching shape.
inline void restore_params(nn::ParamStore& ps, const std::string& prefix,
                           const std::map<std::string, Tensor>& blocks) {
  for (auto& [name, v] : ps.all()) {
    auto it = blocks.find(prefix + name);
    if (it == blocks.end()) throw std::runtime_error("checkpoint missing block: " + prefix + name);
    if (it->second.shape() != v.value().shape())
      throw std::runtime_error("checkpoint block shape mismatch: " + prefix + name);
    v.value() = it->second;
  }
}

}  // namespace texc::nn
