#pragma once

// Training objectives for both networks. Reconstruction losses use sum
// reduction over texels; perceptual and feature-matching terms average over
// elements and sum over taps.

#include <array>
#include <map>
#include <stdexcept>

#include "texc/nets.hpp"
#include "texc/uv_ops.hpp"

namespace texc::nn {

inline Var to_var(const TextureMap& t, bool requires_grad = false) {
  Tensor x({3, t.height, t.width});
  for (int y = 0; y < t.height; ++y)
    for (int xx = 0; xx < t.width; ++xx)
      for (int c = 0; c < 3; ++c) x.at3(c, y, xx) = t.at(y, xx, c);
  return Var::leaf(std::move(x), requires_grad);
}

inline Var to_var(const Mask& m, bool requires_grad = false) {
  Tensor x({1, m.height, m.width});
  std::copy(m.data.begin(), m.data.end(), x.vec().begin());
  return Var::leaf(std::move(x), requires_grad);
}

inline TextureMap to_texture(const Tensor& x) {
  if (x.shape().size() != 3 || x.shape()[0] != 3) throw std::invalid_argument("to_texture: need {3,H,W}");
  TextureMap t(x.shape()[1], x.shape()[2]);
  for (int y = 0; y < t.height; ++y)
    for (int xx = 0; xx < t.width; ++xx)
      for (int c = 0; c < 3; ++c) t.at(y, xx, c) = x.at3(c, y, xx);
  return t;
}

inline Mask to_mask(const Tensor& x) {
  if (x.shape().size() != 3 || x.shape()[0] != 1) throw std::invalid_argument("to_mask: need {1,H,W}");
  Mask m(x.shape()[1], x.shape()[2]);
  std::copy(x.vec().begin(), x.vec().end(), m.data.begin());
  return m;
}

/// Replicates a {1,H,W} mask across 3 channels as a constant.
inline Var mask3(const Mask& m) {
  Tensor x({3, m.height, m.width});
  std::int64_t hw = static_cast<std::int64_t>(m.height) * m.width;
  for (int c = 0; c < 3; ++c) std::copy(m.data.begin(), m.data.end(), x.vec().begin() + c * hw);
  return Var::leaf(std::move(x), false);
}

// ---- sampler losses --------------------------------------------------------

/// sum_i || w_i * M_i o (T_sample - T_GT) ||_1, sum reduction.
inline Var weighted_recon_loss(const Var& t_sample, const Var& t_gt,
                               const RegionPartition& partition) {
  Var diff = sub(t_sample, t_gt);
  Var total;
  for (int i = 0; i < kNumRegions; ++i) {
    Var masked = mul(diff, mask3(partition.masks[static_cast<std::size_t>(i)]));
    Var term = scale(sum(abs_val(masked)), partition.weights[static_cast<std::size_t>(i)]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

/// Normalizer turning the weighted sum into a mean per weighted texel entry.
inline double weighted_recon_normalizer(const RegionPartition& partition) {
  double n = 0.0;
  for (int i = 0; i < kNumRegions; ++i)
    n += partition.weights[static_cast<std::size_t>(i)] *
         partition.masks[static_cast<std::size_t>(i)].sum() * 3.0;
  return n;
}

/// Cosine distance between eps-normalized feature vectors, averaged over
/// pixels and taps: 0.5*|a_n - b_n|^2 equals 1 - cos for unit vectors and is
/// exactly zero on identical inputs.
inline Var perceptual_distance(const Var& a, const Var& b,
                               const PerceptualFeatureExtractor& extractor) {
  auto fa = extractor.forward(a);
  auto fb = extractor.forward(b);
  Var total;
  for (auto& [tap, va] : fa) {
    Var an = channel_l2_normalize(va);
    Var bn = channel_l2_normalize(fb.at(tap));
    Var d = sub(an, bn);
    Var term = scale(mean(sum_channels(mul(d, d))), 0.5f);
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, 1.0f / static_cast<float>(fa.size()));
}

/// L_Sampler = 1 * recon + 1 * perceptual.
inline Var sampler_loss(const Var& t_sample, const Var& t_gt, const RegionPartition& partition,
                        const PerceptualFeatureExtractor& extractor) {
  return add(weighted_recon_loss(t_sample, t_gt, partition),
             perceptual_distance(t_sample, t_gt, extractor));
}

// ---- refiner losses --------------------------------------------------------

struct LossWeights {
  float recon = 10.0f;
  float vgg = 10.0f;
  float gan = 1.0f;
  float fm = 10.0f;
};

/// Per-tap divisors of the tapped perceptual loss; tap i contributes with
/// weight 1/w_i.
struct PerceptualTapSchedule {
  std::array<int, 5> taps = {1, 6, 11, 20, 29};
  std::array<float, 5> divisors = {32.0f, 16.0f, 8.0f, 4.0f, 1.0f};
};

/// T_final is pulled toward T_sample, deliberately not toward T_GT.
/// Sum reduction.
inline Var refiner_recon_loss(const Var& t_final, const Var& t_sample) {
  return l1(t_sample, t_final);
}

/// sum_i (1/w_i) * mean|F_i(T_GT) - F_i(T_final)| over the five taps.
inline Var tapped_perceptual_loss(const Var& t_final, const Var& t_gt,
                                  const PerceptualFeatureExtractor& extractor,
                                  const PerceptualTapSchedule& schedule = {}) {
  auto fg = extractor.forward(t_gt);
  auto ff = extractor.forward(t_final);
  Var total;
  for (std::size_t i = 0; i < schedule.taps.size(); ++i) {
    int tap = schedule.taps[i];
    auto ig = fg.find(tap);
    auto iff = ff.find(tap);
    if (ig == fg.end() || iff == ff.end())
      throw std::runtime_error("tapped_perceptual_loss: extractor missing tap " + std::to_string(tap));
    Var term = scale(l1_mean(ig->second, iff->second), 1.0f / schedule.divisors[i]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

constexpr float kProbEps = 1e-7f;

struct GanLosses {
  Var d_loss;  // discriminator's minimization objective
  Var g_loss;  // generator's minimization objective (non-saturating)
};

/// Vanilla GAN objective over the patch map. The discriminator minimizes
/// -(E log D(real) + E log(1 - D(fake))); the generator minimizes
/// -E log D(fake). Probabilities are clamped to [eps, 1-eps].
inline GanLosses gan_losses(const Discriminator& d, const Var& t_gt, const Var& t_final) {
  auto real = d.forward(t_gt);
  auto fake = d.forward(t_final);
  Var p_real = clamp(real.patches, kProbEps, 1.0f - kProbEps);
  Var p_fake = clamp(fake.patches, kProbEps, 1.0f - kProbEps);
  GanLosses out;
  out.d_loss = scale(add(mean(log_op(p_real)),
                         mean(log_op(add_scalar(scale(p_fake, -1.0f), 1.0f)))),
                     -1.0f);
  out.g_loss = scale(mean(log_op(p_fake)), -1.0f);
  return out;
}

/// sum over the three discriminator taps of mean|D_li(T_GT) - D_li(T_final)|.
inline Var feature_matching_loss(const Discriminator& d, const Var& t_gt, const Var& t_final) {
  auto real = d.forward(t_gt);
  auto fake = d.forward(t_final);
  Var total;
  for (int i = 0; i < 3; ++i) {
    Var term = l1_mean(real.taps[static_cast<std::size_t>(i)], fake.taps[static_cast<std::size_t>(i)]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

struct RefinerLossComponents {
  float recon = 0.0f;
  float vgg = 0.0f;
  float gan = 0.0f;
  float fm = 0.0f;
};

inline float refiner_total_loss(const RefinerLossComponents& c, const LossWeights& w = {}) {
  return w.recon * c.recon + w.vgg * c.vgg + w.gan * c.gan + w.fm * c.fm;
}

inline Var refiner_total_loss(const Var& recon, const Var& vgg, const Var& gan, const Var& fm,
                              const LossWeights& w = {}) {
  return add(add(scale(recon, w.recon), scale(vgg, w.vgg)),
             add(scale(gan, w.gan), scale(fm, w.fm)));
}

/// T_final = T_sample o M_blend + T_refine o (1 - M_blend).
inline Var blend(const Var& t_sample, const Var& t_refine, const Var& m_blend) {
  const auto& s = t_sample.shape();
  if (m_blend.shape() != std::vector<int>{1, s[1], s[2]})
    throw std::invalid_argument("blend: mask shape mismatch");
  Var m3 = concat_channels(concat_channels(m_blend, m_blend), m_blend);
  Var inv = add_scalar(scale(m3, -1.0f), 1.0f);
  return add(mul(t_sample, m3), mul(t_refine, inv));
}

/// Texel-wise blend of plain textures (inference path, no graph).
inline TextureMap blend(const TextureMap& t_sample, const TextureMap& t_refine,
                        const Mask& m_blend) {
  if (!t_sample.same_shape(t_refine) || t_sample.height != m_blend.height ||
      t_sample.width != m_blend.width)
    throw std::invalid_argument("blend: shape mismatch");
  TextureMap out(t_sample.height, t_sample.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      float m = m_blend.at(y, x);
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = t_sample.at(y, x, c) * m + t_refine.at(y, x, c) * (1.0f - m);
    }
  return out;
}

}  // namespace texc::nn
