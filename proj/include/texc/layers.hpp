#pragma once

// Network building blocks on top of the autograd ops: parameter registry,
// convolutions, instance norm, gated convolutions and the residual blocks
// shared by the sampler/refiner architectures.

#include <map>
#include <memory>
#include <string>

#include "texc/autograd.hpp"
#include "texc/rng.hpp"

namespace texc::nn {

/// Named leaf parameters of one network. Names are stable and drive the
/// checkpoint layout.
class ParamStore {
public:
  Var create(const std::string& name, std::vector<int> shape, float stddev, Rng& rng) {
    Tensor t(shape);
    if (stddev > 0.0f)
      for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0f, stddev);
    return insert(name, std::move(t));
  }

  Var create_const(const std::string& name, std::vector<int> shape, float value) {
    Tensor t(shape, value);
    return insert(name, std::move(t));
  }

  Var insert(const std::string& name, Tensor t) {
    if (params_.count(name)) throw std::logic_error("duplicate parameter: " + name);
    Var v = Var::leaf(std::move(t), /*requires_grad=*/true);
    params_.emplace(name, v);
    return v;
  }

  std::map<std::string, Var>& all() { return params_; }
  const std::map<std::string, Var>& all() const { return params_; }

  Var& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no such parameter: " + name);
    return it->second;
  }

  void zero_grad() {
    for (auto& [k, v] : params_) v.zero_grad();
  }

  void set_trainable(bool trainable) {
    for (auto& [k, v] : params_) v.node()->requires_grad = trainable;
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for (const auto& [k, v] : params_) n += v.value().size();
    return n;
  }

private:
  std::map<std::string, Var> params_;
};

struct Conv {
  Var weight, bias;
  int stride = 1;
  int pad = -1;

  Conv() = default;
  Conv(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride_, Rng& rng,
       int pad_ = -1, float init_scale = 1.0f)
      : stride(stride_), pad(pad_) {
    float stddev = init_scale * std::sqrt(2.0f / static_cast<float>(cin * k * k));
    weight = ps.create(name + ".w", {cout, cin, k, k}, stddev, rng);
    bias = ps.create_const(name + ".b", {cout}, 0.0f);
  }

  Var operator()(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }
};

struct InstanceNorm {
  Var gamma, beta;

  InstanceNorm() = default;
  InstanceNorm(ParamStore& ps, const std::string& name, int ch) {
    gamma = ps.create_const(name + ".g", {ch}, 1.0f);
    beta = ps.create_const(name + ".b", {ch}, 0.0f);
  }

  Var operator()(const Var& x) const { return instance_norm(x, gamma, beta); }
};

/// Gated convolution: LeakyReLU feature branch modulated by a sigmoid gate.
struct GatedConv {
  Conv feature, gate;
  InstanceNorm norm;
  float slope;

  GatedConv() = default;
  GatedConv(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride,
            Rng& rng, float slope_ = 0.2f)
      : feature(ps, name + ".f", cin, cout, k, stride, rng),
        gate(ps, name + ".g", cin, cout, k, stride, rng),
        norm(ps, name + ".n", cout),
        slope(slope_) {}

  Var operator()(const Var& x) const {
    return mul(leaky_relu(norm(feature(x)), slope), sigmoid(gate(x)));
  }
};

/// Residual block of two gated convolutions. A strided or channel-changing
/// block projects the skip with a 1x1 convolution.
struct GatedResBlock {
  GatedConv conv1, conv2;
  Conv skip;
  bool has_skip = false;

  GatedResBlock() = default;
  GatedResBlock(ParamStore& ps, const std::string& name, int cin, int cout, int stride, Rng& rng) {
    conv1 = GatedConv(ps, name + ".c1", cin, cout, 3, stride, rng);
    conv2 = GatedConv(ps, name + ".c2", cout, cout, 3, 1, rng);
    has_skip = stride != 1 || cin != cout;
    if (has_skip) skip = Conv(ps, name + ".sk", cin, cout, 1, stride, rng, 0);
  }

  Var operator()(const Var& x) const {
    Var y = conv2(conv1(x));
    return add(y, has_skip ? skip(x) : x);
  }
};

/// Plain residual block (refiner bottleneck).
struct ResBlock {
  Conv conv1, conv2;
  InstanceNorm norm1, norm2;
  float slope;

  ResBlock() = default;
  ResBlock(ParamStore& ps, const std::string& name, int ch, Rng& rng, float slope_ = 0.2f)
      : conv1(ps, name + ".c1", ch, ch, 3, 1, rng),
        conv2(ps, name + ".c2", ch, ch, 3, 1, rng),
        norm1(ps, name + ".n1", ch),
        norm2(ps, name + ".n2", ch),
        slope(slope_) {}

  Var operator()(const Var& x) const {
    Var y = leaky_relu(norm1(conv1(x)), slope);
    y = norm2(conv2(y));
    return add(y, x);
  }
};

/// First-order adaptive-moment optimizer (bias-corrected).
class Adam {
public:
  Adam(ParamStore& ps, float lr = 2e-4f, float beta1 = 0.9f, float beta2 = 0.999f,
       float eps = 1e-8f)
      : ps_(&ps), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& [name, v] : ps.all()) {
      m_.emplace(name, Tensor(v.value().shape()));
      v_.emplace(name, Tensor(v.value().shape()));
    }
  }

  void step() {
    ++t_;
    float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (auto& [name, var] : ps_->all()) {
      if (var.grad().empty()) continue;
      Tensor& m = m_.at(name);
      Tensor& v = v_.at(name);
      Tensor& p = var.value();
      const Tensor& g = var.grad();
      for (std::int64_t i = 0; i < p.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0f - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0f - beta2_) * g[i] * g[i];
        float mh = m[i] / bc1;
        float vh = v[i] / bc2;
        p[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
      }
    }
  }

  long long steps_taken() const { return t_; }

private:
  ParamStore* ps_;
  float lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace texc::nn
