#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace texc {

/// Dense float tensor with row-major layout. Networks use {C,H,W} shapes,
/// image-space code uses {H,W,C} or {H,W}.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f)
      : shape_(std::move(shape)), data_(count(shape_), fill) {}
  Tensor(std::vector<int> shape, std::vector<float> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::size_t>(count(shape_)) != data_.size())
      throw std::invalid_argument("tensor: shape/data size mismatch");
  }

  static std::int64_t count(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dim");
      n *= d;
    }
    return n;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // {C,H,W} accessors
  float& at3(int c, int y, int x) {
    return data_[static_cast<std::size_t>((static_cast<std::int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
  }
  float at3(int c, int y, int x) const {
    return data_[static_cast<std::size_t>((static_cast<std::int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
  }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (float v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  float sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0f); }

  float max_abs_diff(const Tensor& o) const {
    if (!same_shape(o)) throw std::invalid_argument("tensor: shape mismatch");
    float m = 0.0f;
    for (std::size_t i = 0; i < data_.size(); ++i)
      m = std::max(m, std::fabs(data_[i] - o.data_[i]));
    return m;
  }

private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += std::to_string(s[i]);
    if (i + 1 < s.size()) out += ",";
  }
  return out + ")";
}

}  // namespace texc
