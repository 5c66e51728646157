#pragma once

// Reverse-mode autograd over dense float tensors. Graphs are built per
// forward pass; backward() walks the tape in reverse topological order.
// Convolutions run through im2col + Eigen matrix products.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "texc/tensor.hpp"

namespace texc::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;  // accumulates into parents' grads

  Tensor& ensure_grad() {
    if (grad.empty() && value.size() > 0) grad = Tensor(value.shape());
    return grad;
  }
};

/// Handle to a node in the autograd graph.
class Var {
public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  static Var leaf(Tensor value, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  NodePtr node() const { return node_; }

  const std::vector<int>& shape() const { return node_->value.shape(); }
  float item() const {
    if (node_->value.size() != 1) throw std::logic_error("item(): not a scalar");
    return node_->value[0];
  }

  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.fill(0.0f);
  }

private:
  NodePtr node_;
};

namespace detail {

inline Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (auto& p : parents) {
    n->requires_grad = n->requires_grad || p.requires_grad();
    n->parents.push_back(p.node());
  }
  if (n->requires_grad) n->backward_fn = std::move(backward);
  return Var(std::move(n));
}

inline void topo_sort(Node* root, std::vector<Node*>& order) {
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
}

}  // namespace detail

/// Backpropagates from a scalar root. Accumulates into leaf grads; call
/// zero_grad on parameters between steps.
inline void backward(const Var& root) {
  if (root.value().size() != 1) throw std::logic_error("backward: root must be scalar");
  if (!root.requires_grad()) return;
  std::vector<Node*> order;
  detail::topo_sort(root.node().get(), order);
  root.node()->ensure_grad();
  root.node()->grad[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

// ---- elementwise ----------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("add: shape mismatch");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    for (int k = 0; k < 2; ++k) {
      Node& p = *n.parents[static_cast<std::size_t>(k)];
      if (!p.requires_grad) continue;
      Tensor& g = p.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("sub: shape mismatch");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) {
      Tensor& g = pa.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

inline Var mul(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("mul: shape mismatch");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) {
      Tensor& g = pa.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pa.value[i];
    }
  });
}

inline Var scale(const Var& a, float s) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  return detail::make_op(std::move(out), {a}, [s](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * s;
  });
}

inline Var add_scalar(const Var& a, float c) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + c;
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

inline Var abs_val(const Var& a) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::fabs(a.value()[i]);
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) {
      float x = p.value[i];
      g[i] += n.grad[i] * (x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f));
    }
  });
}

inline Var leaky_relu(const Var& a, float slope = 0.2f) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    float x = a.value()[i];
    out[i] = x > 0.0f ? x : slope * x;
  }
  return detail::make_op(std::move(out), {a}, [slope](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i)
      g[i] += n.grad[i] * (p.value[i] > 0.0f ? 1.0f : slope);
  });
}

inline Var sigmoid(const Var& a) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 1.0f / (1.0f + std::exp(-a.value()[i]));
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) {
      float y = n.value[i];
      g[i] += n.grad[i] * y * (1.0f - y);
    }
  });
}

inline Var tanh_act(const Var& a) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) {
      float y = n.value[i];
      g[i] += n.grad[i] * (1.0f - y * y);
    }
  });
}

/// Clamp with pass-through gradient strictly inside [lo,hi], zero outside.
inline Var clamp(const Var& a, float lo, float hi) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i)
    out[i] = std::min(std::max(a.value()[i], lo), hi);
  return detail::make_op(std::move(out), {a}, [lo, hi](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) {
      float x = p.value[i];
      if (x > lo && x < hi) g[i] += n.grad[i];
    }
  });
}

inline Var log_op(const Var& a) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::log(a.value()[i]);
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] / p.value[i];
  });
}

// ---- reductions ------------------------------------------------------------

inline Var sum(const Var& a) {
  Tensor out({1});
  double s = 0.0;
  for (std::int64_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
  out[0] = static_cast<float>(s);
  return detail::make_op(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    float go = n.grad[0];
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += go;
  });
}

inline Var mean(const Var& a) {
  const float inv = 1.0f / static_cast<float>(a.value().size());
  return scale(sum(a), inv);
}

inline Var l1(const Var& a, const Var& b) { return sum(abs_val(sub(a, b))); }
inline Var l1_mean(const Var& a, const Var& b) { return mean(abs_val(sub(a, b))); }

// ---- structure -------------------------------------------------------------

inline Var concat_channels(const Var& a, const Var& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 3 || sb.size() != 3 || sa[1] != sb[1] || sa[2] != sb[2])
    throw std::invalid_argument("concat_channels: incompatible shapes");
  Tensor out({sa[0] + sb[0], sa[1], sa[2]});
  std::copy(a.value().data(), a.value().data() + a.value().size(), out.data());
  std::copy(b.value().data(), b.value().data() + b.value().size(),
            out.data() + a.value().size());
  return detail::make_op(std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    std::int64_t na = pa.value.size();
    if (pa.requires_grad) {
      Tensor& g = pa.ensure_grad();
      for (std::int64_t i = 0; i < na; ++i) g[i] += n.grad[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[na + i];
    }
  });
}

inline Var bias_add(const Var& x, const Var& b) {
  const auto& s = x.shape();
  if (s.size() != 3 || b.shape() != std::vector<int>{s[0]})
    throw std::invalid_argument("bias_add: incompatible shapes");
  Tensor out = x.value();
  std::int64_t hw = static_cast<std::int64_t>(s[1]) * s[2];
  for (int c = 0; c < s[0]; ++c) {
    float bc = b.value()[c];
    for (std::int64_t i = 0; i < hw; ++i) out[c * hw + i] += bc;
  }
  return detail::make_op(std::move(out), {x, b}, [](Node& n) {
    Node& px = *n.parents[0];
    Node& pb = *n.parents[1];
    int ch = px.value.shape()[0];
    std::int64_t hw = static_cast<std::int64_t>(px.value.shape()[1]) * px.value.shape()[2];
    if (px.requires_grad) {
      Tensor& g = px.ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) s += n.grad[c * hw + i];
        g[c] += static_cast<float>(s);
      }
    }
  });
}

/// Sum over the channel axis: {C,H,W} -> {1,H,W}.
inline Var sum_channels(const Var& x) {
  const auto& s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("sum_channels: need {C,H,W}");
  std::int64_t hw = static_cast<std::int64_t>(s[1]) * s[2];
  Tensor out({1, s[1], s[2]});
  for (int c = 0; c < s[0]; ++c)
    for (std::int64_t i = 0; i < hw; ++i) out[i] += x.value()[c * hw + i];
  return detail::make_op(std::move(out), {x}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    int ch = p.value.shape()[0];
    std::int64_t hw = static_cast<std::int64_t>(p.value.shape()[1]) * p.value.shape()[2];
    for (int c = 0; c < ch; ++c)
      for (std::int64_t i = 0; i < hw; ++i) g[c * hw + i] += n.grad[i];
  });
}

/// Per-pixel L2 normalization across channels: y = x / sqrt(sum_c x^2 + eps).
inline Var channel_l2_normalize(const Var& x, float eps = 1e-8f) {
  const auto& s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("channel_l2_normalize: need {C,H,W}");
  int ch = s[0];
  std::int64_t hw = static_cast<std::int64_t>(s[1]) * s[2];
  Tensor out(s);
  Tensor norms({s[1], s[2]});
  for (std::int64_t i = 0; i < hw; ++i) {
    double sq = eps;
    for (int c = 0; c < ch; ++c) {
      float v = x.value()[c * hw + i];
      sq += static_cast<double>(v) * v;
    }
    float nrm = static_cast<float>(std::sqrt(sq));
    norms[i] = nrm;
    for (int c = 0; c < ch; ++c) out[c * hw + i] = x.value()[c * hw + i] / nrm;
  }
  return detail::make_op(std::move(out), {x}, [norms](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    int ch = p.value.shape()[0];
    std::int64_t hw = static_cast<std::int64_t>(p.value.shape()[1]) * p.value.shape()[2];
    for (std::int64_t i = 0; i < hw; ++i) {
      float nrm = norms[i];
      double dot = 0.0;
      for (int c = 0; c < ch; ++c) dot += static_cast<double>(n.value[c * hw + i]) * n.grad[c * hw + i];
      for (int c = 0; c < ch; ++c)
        g[c * hw + i] += (n.grad[c * hw + i] - n.value[c * hw + i] * static_cast<float>(dot)) / nrm;
    }
  });
}

// ---- normalization ---------------------------------------------------------

/// Instance normalization over {C,H,W} with per-channel affine parameters.
inline Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f) {
  const auto& s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("instance_norm: need {C,H,W}");
  if (gamma.shape() != std::vector<int>{s[0]} || beta.shape() != std::vector<int>{s[0]})
    throw std::invalid_argument("instance_norm: bad affine shapes");
  int ch = s[0];
  std::int64_t hw = static_cast<std::int64_t>(s[1]) * s[2];
  Tensor out(s);
  Tensor xhat(s);
  Tensor inv_sigma({ch});
  for (int c = 0; c < ch; ++c) {
    double m = 0.0;
    for (std::int64_t i = 0; i < hw; ++i) m += x.value()[c * hw + i];
    m /= static_cast<double>(hw);
    double var = 0.0;
    for (std::int64_t i = 0; i < hw; ++i) {
      double d = x.value()[c * hw + i] - m;
      var += d * d;
    }
    var /= static_cast<double>(hw);
    float is = static_cast<float>(1.0 / std::sqrt(var + eps));
    inv_sigma[c] = is;
    float gm = gamma.value()[c], bt = beta.value()[c];
    for (std::int64_t i = 0; i < hw; ++i) {
      float xh = (x.value()[c * hw + i] - static_cast<float>(m)) * is;
      xhat[c * hw + i] = xh;
      out[c * hw + i] = xh * gm + bt;
    }
  }
  return detail::make_op(std::move(out), {x, gamma, beta}, [xhat, inv_sigma](Node& n) {
    Node& px = *n.parents[0];
    Node& pg = *n.parents[1];
    Node& pb = *n.parents[2];
    int ch = px.value.shape()[0];
    std::int64_t hw = static_cast<std::int64_t>(px.value.shape()[1]) * px.value.shape()[2];
    for (int c = 0; c < ch; ++c) {
      double gsum = 0.0, gxsum = 0.0;
      for (std::int64_t i = 0; i < hw; ++i) {
        gsum += n.grad[c * hw + i];
        gxsum += static_cast<double>(n.grad[c * hw + i]) * xhat[c * hw + i];
      }
      if (pg.requires_grad) pg.ensure_grad()[c] += static_cast<float>(gxsum);
      if (pb.requires_grad) pb.ensure_grad()[c] += static_cast<float>(gsum);
      if (px.requires_grad) {
        Tensor& g = px.ensure_grad();
        float gm = pg.value[c];
        float gmean = static_cast<float>(gsum / static_cast<double>(hw));
        float gxmean = static_cast<float>(gxsum / static_cast<double>(hw));
        for (std::int64_t i = 0; i < hw; ++i)
          g[c * hw + i] += gm * inv_sigma[c] *
                           (n.grad[c * hw + i] - gmean - xhat[c * hw + i] * gxmean);
      }
    }
  });
}

// ---- convolution -----------------------------------------------------------

namespace detail {

inline void im2col(const Tensor& x, int kh, int kw, int stride, int pad, Tensor& cols, int hout,
                   int wout) {
  int cin = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  // cols: {cin*kh*kw, hout*wout}
  float* cp = cols.data();
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const float* xc = x.data() + static_cast<std::int64_t>(c) * h * w;
        for (int oy = 0; oy < hout; ++oy) {
          int iy = oy * stride - pad + ky;
          for (int ox = 0; ox < wout; ++ox) {
            int ix = ox * stride - pad + kx;
            *cp++ = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                        ? xc[static_cast<std::int64_t>(iy) * w + ix]
                        : 0.0f;
          }
        }
      }
}

inline void col2im_accum(const Tensor& cols, int cin, int h, int w, int kh, int kw, int stride,
                         int pad, int hout, int wout, Tensor& dx) {
  const float* cp = cols.data();
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        float* xc = dx.data() + static_cast<std::int64_t>(c) * h * w;
        for (int oy = 0; oy < hout; ++oy) {
          int iy = oy * stride - pad + ky;
          for (int ox = 0; ox < wout; ++ox) {
            int ix = ox * stride - pad + kx;
            float v = *cp++;
            if (iy >= 0 && iy < h && ix >= 0 && ix < w)
              xc[static_cast<std::int64_t>(iy) * w + ix] += v;
          }
        }
      }
}

}  // namespace detail

/// 2D convolution: x {Cin,H,W}, w {Cout,Cin,kh,kw}, b {Cout}.
inline Var conv2d(const Var& x, const Var& w, const Var& b, int stride = 1, int pad = -1) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (xs.size() != 3 || ws.size() != 4 || ws[1] != xs[0])
    throw std::invalid_argument("conv2d: incompatible shapes " + shape_str(xs) + " " + shape_str(ws));
  int cout = ws[0], cin = ws[1], kh = ws[2], kw = ws[3];
  if (pad < 0) pad = kh / 2;  // 'same' padding for odd kernels at stride 1
  int h = xs[1], wd = xs[2];
  int hout = (h + 2 * pad - kh) / stride + 1;
  int wout = (wd + 2 * pad - kw) / stride + 1;
  if (hout <= 0 || wout <= 0) throw std::invalid_argument("conv2d: empty output");

  Tensor cols({cin * kh * kw, hout * wout});
  detail::im2col(x.value(), kh, kw, stride, pad, cols, hout, wout);

  Tensor out({cout, hout, wout});
  {
    ConstMatMap wm(w.value().data(), cout, cin * kh * kw);
    ConstMatMap cm(cols.data(), cin * kh * kw, hout * wout);
    MatMap om(out.data(), cout, hout * wout);
    om.noalias() = wm * cm;
    for (int c = 0; c < cout; ++c) om.row(c).array() += b.value()[c];
  }

  auto cols_keep = std::make_shared<Tensor>(std::move(cols));
  int params[5] = {stride, pad, kh, kw, 0};
  return detail::make_op(std::move(out), {x, w, b},
                         [cols_keep, stride = params[0], pad = params[1], kh = params[2],
                          kw = params[3]](Node& n) {
    Node& px = *n.parents[0];
    Node& pw = *n.parents[1];
    Node& pb = *n.parents[2];
    int cout = n.value.shape()[0], hout = n.value.shape()[1], wout = n.value.shape()[2];
    int cin = px.value.shape()[0], h = px.value.shape()[1], wd = px.value.shape()[2];
    ConstMatMap gm(n.grad.data(), cout, hout * wout);
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (int c = 0; c < cout; ++c) g[c] += gm.row(c).sum();
    }
    if (pw.requires_grad) {
      Tensor& g = pw.ensure_grad();
      ConstMatMap cm(cols_keep->data(), cin * kh * kw, hout * wout);
      MatMap gw(g.data(), cout, cin * kh * kw);
      gw.noalias() += gm * cm.transpose();
    }
    if (px.requires_grad) {
      Tensor dcols({cin * kh * kw, hout * wout});
      ConstMatMap wm(pw.value.data(), cout, cin * kh * kw);
      MatMap dcm(dcols.data(), cin * kh * kw, hout * wout);
      dcm.noalias() = wm.transpose() * gm;
      Tensor& g = px.ensure_grad();
      detail::col2im_accum(dcols, cin, h, wd, kh, kw, stride, pad, hout, wout, g);
    }
  });
}

// ---- resampling ------------------------------------------------------------

/// Nearest-neighbor x2 upsampling.
inline Var upsample_nearest2(const Var& x) {
  const auto& s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("upsample_nearest2: need {C,H,W}");
  int ch = s[0], h = s[1], w = s[2];
  Tensor out({ch, h * 2, w * 2});
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h * 2; ++y)
      for (int x2 = 0; x2 < w * 2; ++x2)
        out.at3(c, y, x2) = x.value().at3(c, y / 2, x2 / 2);
  return detail::make_op(std::move(out), {x}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    int ch = p.value.shape()[0], h = p.value.shape()[1], w = p.value.shape()[2];
    for (int c = 0; c < ch; ++c)
      for (int y = 0; y < h * 2; ++y)
        for (int x2 = 0; x2 < w * 2; ++x2) g.at3(c, y / 2, x2 / 2) += n.grad.at3(c, y, x2);
  });
}

/// Bilinear sampling of x {C,H,W} at grid {2,Ho,Wo} coordinates in [-1,1]
/// (channel 0 = x coordinate, channel 1 = y coordinate). Out-of-range reads
/// clamp to the border; gradients flow to both the input and the grid.
inline Var grid_sample(const Var& x, const Var& grid) {
  const auto& xs = x.shape();
  const auto& gs = grid.shape();
  if (xs.size() != 3 || gs.size() != 3 || gs[0] != 2)
    throw std::invalid_argument("grid_sample: need x {C,H,W}, grid {2,Ho,Wo}");
  int ch = xs[0], h = xs[1], w = xs[2];
  int ho = gs[1], wo = gs[2];
  std::int64_t hwo = static_cast<std::int64_t>(ho) * wo;
  Tensor out({ch, ho, wo});

  auto unnormalize = [](float g, int extent) {
    // align_corners=false convention: g=-1 -> -0.5, g=+1 -> extent-0.5
    return ((g + 1.0f) * static_cast<float>(extent) - 1.0f) * 0.5f;
  };

  // cache per-pixel sample geometry for backward
  struct Geom {
    int x0, y0;
    float wx, wy;
    bool cx, cy;  // coordinate was clamped (zero grid gradient on that axis)
  };
  auto geoms = std::make_shared<std::vector<Geom>>(static_cast<std::size_t>(hwo));

  for (std::int64_t i = 0; i < hwo; ++i) {
    float gx = grid.value()[i];
    float gy = grid.value()[hwo + i];
    float fx = unnormalize(gx, w);
    float fy = unnormalize(gy, h);
    bool cx = false, cy = false;
    // written so that NaN coordinates also land in the clamped branch
    if (!(fx >= 0.0f)) { fx = 0.0f; cx = true; }
    if (fx > static_cast<float>(w - 1)) { fx = static_cast<float>(w - 1); cx = true; }
    if (!(fy >= 0.0f)) { fy = 0.0f; cy = true; }
    if (fy > static_cast<float>(h - 1)) { fy = static_cast<float>(h - 1); cy = true; }
    int x0 = std::min(static_cast<int>(fx), w - 2 >= 0 ? w - 2 : 0);
    int y0 = std::min(static_cast<int>(fy), h - 2 >= 0 ? h - 2 : 0);
    float wx = fx - static_cast<float>(x0);
    float wy = fy - static_cast<float>(y0);
    (*geoms)[static_cast<std::size_t>(i)] = {x0, y0, wx, wy, cx, cy};
    int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    for (int c = 0; c < ch; ++c) {
      const float* xc = x.value().data() + static_cast<std::int64_t>(c) * h * w;
      float v00 = xc[static_cast<std::int64_t>(y0) * w + x0];
      float v01 = xc[static_cast<std::int64_t>(y0) * w + x1];
      float v10 = xc[static_cast<std::int64_t>(y1) * w + x0];
      float v11 = xc[static_cast<std::int64_t>(y1) * w + x1];
      out[c * hwo + i] = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
    }
  }

  return detail::make_op(std::move(out), {x, grid}, [geoms](Node& n) {
    Node& px = *n.parents[0];
    Node& pg = *n.parents[1];
    int ch = px.value.shape()[0], h = px.value.shape()[1], w = px.value.shape()[2];
    int ho = n.value.shape()[1], wo = n.value.shape()[2];
    std::int64_t hwo = static_cast<std::int64_t>(ho) * wo;
    for (std::int64_t i = 0; i < hwo; ++i) {
      const auto& gm = (*geoms)[static_cast<std::size_t>(i)];
      int x1 = std::min(gm.x0 + 1, w - 1), y1 = std::min(gm.y0 + 1, h - 1);
      float dfx = 0.0f, dfy = 0.0f;
      for (int c = 0; c < ch; ++c) {
        float go = n.grad[c * hwo + i];
        if (go == 0.0f) continue;
        const float* xc = px.value.data() + static_cast<std::int64_t>(c) * h * w;
        float v00 = xc[static_cast<std::int64_t>(gm.y0) * w + gm.x0];
        float v01 = xc[static_cast<std::int64_t>(gm.y0) * w + x1];
        float v10 = xc[static_cast<std::int64_t>(y1) * w + gm.x0];
        float v11 = xc[static_cast<std::int64_t>(y1) * w + x1];
        if (px.requires_grad) {
          float* gx = px.ensure_grad().data() + static_cast<std::int64_t>(c) * h * w;
          gx[static_cast<std::int64_t>(gm.y0) * w + gm.x0] += go * (1 - gm.wy) * (1 - gm.wx);
          gx[static_cast<std::int64_t>(gm.y0) * w + x1] += go * (1 - gm.wy) * gm.wx;
          gx[static_cast<std::int64_t>(y1) * w + gm.x0] += go * gm.wy * (1 - gm.wx);
          gx[static_cast<std::int64_t>(y1) * w + x1] += go * gm.wy * gm.wx;
        }
        dfx += go * ((1 - gm.wy) * (v01 - v00) + gm.wy * (v11 - v10));
        dfy += go * ((1 - gm.wx) * (v10 - v00) + gm.wx * (v11 - v01));
      }
      if (pg.requires_grad) {
        Tensor& gg = pg.ensure_grad();
        if (!gm.cx) gg[i] += dfx * 0.5f * static_cast<float>(w);
        if (!gm.cy) gg[hwo + i] += dfy * 0.5f * static_cast<float>(h);
      }
    }
  });
}

}  // namespace texc::nn
