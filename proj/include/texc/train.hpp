#pragma once

// Two-phase training harness: sampler first (curriculum loop), refiner second
// against the frozen sampler, plus checkpointing and inference.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "texc/checkpoint.hpp"
#include "texc/config.hpp"
#include "texc/dataset.hpp"
#include "texc/losses.hpp"
#include "texc/metrics.hpp"
#include "texc/nets.hpp"

namespace texc {

struct TrainConfig {
  float lr = 2e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  int batch_size = 8;
  long long iterations = 30000;
  float p_aug = 0.8f;
  float delta = 0.025f;
  float jitter_prob = 0.5f;
  std::uint64_t seed = 0;
  int resolution = 256;
  int iters_per_step = 4000;
  float densepose_mix = 0.5f;
  int sampler_width = 32;
  int refiner_width = 32;
  int disc_width = 32;
  long long checkpoint_every = 2000;
  long long log_every = 1;
  std::string out_dir = "runs/default";
  std::string fixtures;
  std::string resume;
  std::string config_echo;

  static TrainConfig from_config(const Config& cfg) {
    TrainConfig t;
    t.lr = static_cast<float>(cfg.get_double("lr", t.lr));
    t.beta1 = static_cast<float>(cfg.get_double("beta1", t.beta1));
    t.beta2 = static_cast<float>(cfg.get_double("beta2", t.beta2));
    t.batch_size = static_cast<int>(cfg.get_int("batch_size", t.batch_size));
    t.iterations = cfg.get_int("iterations", t.iterations);
    t.p_aug = static_cast<float>(cfg.get_double("p_aug", t.p_aug));
    t.delta = static_cast<float>(cfg.get_double("delta", t.delta));
    t.jitter_prob = static_cast<float>(cfg.get_double("jitter_prob", t.jitter_prob));
    t.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    t.resolution = static_cast<int>(cfg.get_int("resolution", t.resolution));
    t.iters_per_step = static_cast<int>(cfg.get_int("iters_per_step", t.iters_per_step));
    t.densepose_mix = static_cast<float>(cfg.get_double("densepose_mix", t.densepose_mix));
    t.sampler_width = static_cast<int>(cfg.get_int("sampler_width", t.sampler_width));
    t.refiner_width = static_cast<int>(cfg.get_int("refiner_width", t.refiner_width));
    t.disc_width = static_cast<int>(cfg.get_int("disc_width", t.disc_width));
    t.checkpoint_every = cfg.get_int("checkpoint_every", t.checkpoint_every);
    t.log_every = cfg.get_int("log_every", t.log_every);
    t.out_dir = cfg.get_string("out_dir", t.out_dir);
    t.fixtures = fixture_root(cfg);
    t.resume = cfg.get_string("resume", "");
    t.config_echo = cfg.serialize();
    if (t.batch_size <= 0 || t.iterations < 0) throw std::runtime_error("bad training config");
    return t;
  }

  AugmentConfig augment_config() const {
    AugmentConfig a;
    a.p_aug = p_aug;
    a.jitter_prob = jitter_prob;
    a.validate();
    return a;
  }
};

/// Raised when a loss goes non-finite; carries the offending batch indices.
struct TrainingAbort : std::runtime_error {
  explicit TrainingAbort(const std::string& msg) : std::runtime_error(msg) {}
};

struct LossRecord {
  long long iteration = 0;
  double recon = 0.0;
  double perceptual = 0.0;
  double gan = 0.0;
  double fm = 0.0;
  double total = 0.0;
  double d_loss = 0.0;
  float alpha = 0.0f;
  int step = 0;
  int densepose_sources = 0;
  int augmented = 0;

  std::string line() const {
    std::ostringstream s;
    s.precision(10);
    s << "iter=" << iteration << " recon=" << recon << " perc=" << perceptual;
    if (gan != 0.0 || fm != 0.0 || d_loss != 0.0)
      s << " gan=" << gan << " fm=" << fm << " d=" << d_loss;
    s << " total=" << total << " alpha=" << alpha << " step=" << step
      << " dp=" << densepose_sources << " aug=" << augmented;
    return s.str();
  }
};

struct TrainResult {
  std::string checkpoint_path;
  std::vector<LossRecord> log;
};

namespace detail {

inline std::uint64_t param_hash(const nn::ParamStore& ps) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const auto& [name, v] : ps.all()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.value().data());
    std::size_t n = static_cast<std::size_t>(v.value().size()) * sizeof(float);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline void check_finite(double v, long long iter, const std::vector<int>& batch_indices,
                         const char* what) {
  if (std::isfinite(v)) return;
  std::ostringstream msg;
  msg << "non-finite " << what << " at iteration " << iter << "; batch sample indices:";
  for (int i : batch_indices) msg << " " << i;
  throw TrainingAbort(msg.str());
}

inline std::ofstream open_log(const std::string& out_dir, const char* name) {
  std::filesystem::create_directories(out_dir);
  std::ofstream log(std::filesystem::path(out_dir) / name);
  if (!log) throw std::runtime_error("cannot open loss log in " + out_dir);
  return log;
}

}  // namespace detail

inline TrainResult train_sampler(const TrainConfig& cfg, const FixtureSet& dataset) {
  if (dataset.resolution() != cfg.resolution)
    throw std::runtime_error("fixture resolution does not match config");
  Rng init_rng(cfg.seed);
  nn::SamplerConfig scfg;
  scfg.resolution = cfg.resolution;
  scfg.base_width = cfg.sampler_width;
  nn::SamplerNet net(scfg, init_rng);
  nn::PerceptualFeatureExtractor extractor;
  nn::Adam opt(net.params(), cfg.lr, cfg.beta1, cfg.beta2);

  long long start_iter = 0;
  if (!cfg.resume.empty()) {
    nn::CheckpointMeta meta;
    auto blocks = nn::checkpoint_load(cfg.resume, meta);
    nn::restore_params(net.params(), "sampler/", blocks);
    start_iter = meta.iteration;
  }

  Rng data_rng(cfg.seed + 1 + static_cast<std::uint64_t>(start_iter) * 7919ull);
  AugmentConfig aug = cfg.augment_config();
  CurriculumState state;
  state.iters_per_step = cfg.iters_per_step;
  state.delta = cfg.delta;
  state.densepose_mix = cfg.densepose_mix;

  auto log_file = detail::open_log(cfg.out_dir, "sampler_loss.log");
  TrainResult result;
  const float inv_batch = 1.0f / static_cast<float>(cfg.batch_size);

  for (long long iter = start_iter; iter < cfg.iterations; ++iter) {
    state.iteration = iter;
    LossRecord rec;
    rec.iteration = iter;
    rec.step = current_step(state);
    rec.alpha = current_alpha(state);
    std::vector<int> batch_indices;

    net.params().zero_grad();
    for (int b = 0; b < cfg.batch_size; ++b) {
      TrainingExample ex = make_training_example(dataset, state, aug, data_rng);
      batch_indices.push_back(ex.sample_index);
      if (ex.source == SourceKind::DensePoseFixture) ++rec.densepose_sources;
      if (ex.augmented) ++rec.augmented;

      nn::Var t_input = nn::to_var(ex.t_input);
      nn::Var grid = net.forward(t_input, nn::to_var(ex.m_vis), nn::to_var(ex.normal));
      nn::Var t_sample = nn::grid_sample(t_input, grid);
      nn::Var recon = nn::weighted_recon_loss(t_sample, nn::to_var(ex.t_gt), dataset.partition);
      nn::Var perc = nn::perceptual_distance(t_sample, nn::to_var(ex.t_gt), extractor);
      nn::Var loss = nn::add(recon, perc);
      rec.recon += recon.item() * inv_batch;
      rec.perceptual += perc.item() * inv_batch;
      nn::backward(nn::scale(loss, inv_batch));
    }
    rec.total = rec.recon + rec.perceptual;
    detail::check_finite(rec.total, iter, batch_indices, "sampler loss");
    opt.step();

    if (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations) {
      log_file << rec.line() << "\n";
      result.log.push_back(rec);
    }
    if (cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0 &&
        iter + 1 != cfg.iterations) {
      std::map<std::string, Tensor> blocks;
      nn::collect_params(net.params(), "sampler/", blocks);
      nn::checkpoint_save(
          (std::filesystem::path(cfg.out_dir) / ("sampler_" + std::to_string(iter + 1) + ".ckpt"))
              .string(),
          blocks, {cfg.config_echo, iter + 1, cfg.seed});
    }
  }
  log_file.flush();

  std::map<std::string, Tensor> blocks;
  nn::collect_params(net.params(), "sampler/", blocks);
  result.checkpoint_path = (std::filesystem::path(cfg.out_dir) / "sampler_final.ckpt").string();
  nn::checkpoint_save(result.checkpoint_path, blocks, {cfg.config_echo, cfg.iterations, cfg.seed});
  return result;
}

inline TrainResult train_refiner(const TrainConfig& cfg, const FixtureSet& dataset,
                                 const std::string& sampler_checkpoint) {
  if (dataset.resolution() != cfg.resolution)
    throw std::runtime_error("fixture resolution does not match config");
  Rng init_rng(cfg.seed + 17);
  nn::SamplerConfig scfg;
  scfg.resolution = cfg.resolution;
  scfg.base_width = cfg.sampler_width;
  nn::SamplerNet sampler(scfg, init_rng);
  {
    nn::CheckpointMeta meta;
    auto blocks = nn::checkpoint_load(sampler_checkpoint, meta);
    nn::restore_params(sampler.params(), "sampler/", blocks);
  }
  sampler.params().set_trainable(false);
  const std::uint64_t frozen_hash = detail::param_hash(sampler.params());

  nn::RefinerConfig rcfg;
  rcfg.resolution = cfg.resolution;
  rcfg.base_width = cfg.refiner_width;
  nn::RefinerNet refiner(rcfg, init_rng);
  nn::Discriminator disc(cfg.disc_width, init_rng);
  nn::PerceptualFeatureExtractor extractor;
  nn::Adam opt_g(refiner.params(), cfg.lr, cfg.beta1, cfg.beta2);
  nn::Adam opt_d(disc.params(), cfg.lr, cfg.beta1, cfg.beta2);
  nn::LossWeights weights;

  // The sampler was trained through the full curriculum; refiner inputs are
  // built at the final curriculum step.
  CurriculumState state;
  state.iters_per_step = cfg.iters_per_step;
  state.delta = cfg.delta;
  state.densepose_mix = cfg.densepose_mix;
  state.iteration = std::max<long long>(cfg.iterations - 1, 0);
  AugmentConfig aug = cfg.augment_config();

  Rng data_rng(cfg.seed + 23);
  auto log_file = detail::open_log(cfg.out_dir, "refiner_loss.log");
  TrainResult result;
  const float inv_batch = 1.0f / static_cast<float>(cfg.batch_size);

  for (long long iter = 0; iter < cfg.iterations; ++iter) {
    LossRecord rec;
    rec.iteration = iter;
    rec.step = current_step(state);
    rec.alpha = current_alpha(state);
    std::vector<int> batch_indices;

    refiner.params().zero_grad();
    disc.params().zero_grad();
    for (int b = 0; b < cfg.batch_size; ++b) {
      TrainingExample ex = make_training_example(dataset, state, aug, data_rng);
      batch_indices.push_back(ex.sample_index);
      if (data_rng.bernoulli(cfg.jitter_prob)) {
        JitterParams jp = draw_jitter(data_rng);
        ex.t_input = apply_jitter(ex.t_input, jp);
        ex.t_gt = apply_jitter(ex.t_gt, jp);
      }

      // frozen sampler produces T_sample; no gradients flow into it
      nn::Var t_input = nn::to_var(ex.t_input);
      nn::Var grid = sampler.forward(t_input, nn::to_var(ex.m_vis), nn::to_var(ex.normal));
      Tensor t_sample_val = nn::grid_sample(t_input, grid).value();
      nn::Var t_sample = nn::Var::leaf(t_sample_val);

      Mask m_occ = occlusion_mask(dataset.m_uv, ex.m_src);
      auto out = refiner.forward(t_sample, nn::to_var(m_occ));
      nn::Var t_final = nn::blend(t_sample, out.texture, out.blend_mask);
      nn::Var t_gt = nn::to_var(ex.t_gt);

      // discriminator step on the detached fake
      nn::Var t_final_detached = nn::Var::leaf(t_final.value());
      nn::GanLosses d_gan = nn::gan_losses(disc, t_gt, t_final_detached);
      rec.d_loss += d_gan.d_loss.item() * inv_batch;
      nn::backward(nn::scale(d_gan.d_loss, inv_batch));

      // generator step; gradients flow through the live discriminator graph
      nn::GanLosses g_gan = nn::gan_losses(disc, t_gt, t_final);
      nn::Var recon = nn::refiner_recon_loss(t_final, t_sample);
      nn::Var vgg = nn::tapped_perceptual_loss(t_final, t_gt, extractor);
      nn::Var fm = nn::feature_matching_loss(disc, t_gt, t_final);
      nn::Var total = nn::refiner_total_loss(recon, vgg, g_gan.g_loss, fm, weights);
      rec.recon += recon.item() * inv_batch;
      rec.perceptual += vgg.item() * inv_batch;
      rec.gan += g_gan.g_loss.item() * inv_batch;
      rec.fm += fm.item() * inv_batch;
      rec.total += total.item() * inv_batch;
      nn::backward(nn::scale(total, inv_batch));
    }
    detail::check_finite(rec.total + rec.d_loss, iter, batch_indices, "refiner loss");
    opt_d.step();
    // the generator backward also deposited grads on the discriminator and
    // would corrupt its next step; drop them
    disc.params().zero_grad();
    opt_g.step();

    if (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations) {
      log_file << rec.line() << "\n";
      result.log.push_back(rec);
    }
  }
  log_file.flush();

  if (detail::param_hash(sampler.params()) != frozen_hash)
    throw std::logic_error("frozen sampler parameters changed during refiner training");

  std::map<std::string, Tensor> blocks;
  nn::collect_params(refiner.params(), "refiner/", blocks);
  nn::collect_params(disc.params(), "disc/", blocks);
  result.checkpoint_path = (std::filesystem::path(cfg.out_dir) / "refiner_final.ckpt").string();
  nn::checkpoint_save(result.checkpoint_path, blocks, {cfg.config_echo, cfg.iterations, cfg.seed});
  return result;
}

// ---- inference --------------------------------------------------------------

struct InferInputs {
  // image mode
  std::optional<TextureMap> image;
  std::optional<IuvMap> iuv;
  // partial-texture mode
  std::optional<TextureMap> partial;
  std::optional<Mask> vis;
  TextureMap normal;
};

struct InferResult {
  TextureMap t_input;
  TextureMap t_sample;
  TextureMap t_refine;
  TextureMap t_final;
  Mask m_blend;
  Mask m_src;
  Mask m_occ;
};

struct InferOptions {
  bool use_refiner = true;
  std::optional<float> blend_override;  // force a constant M_blend
};

inline InferResult infer(const InferInputs& in, const Atlas& atlas, nn::SamplerNet& sampler,
                         nn::RefinerNet* refiner, const InferOptions& opts = {}) {
  TextureMap t_source;
  Mask m_src;
  if (in.partial && in.vis) {
    t_source = *in.partial;
    m_src = *in.vis;
  } else if (in.image) {
    if (!in.iuv)
      throw std::runtime_error(
          "image input requires an IUV map; provide one or use partial-texture mode "
          "(--partial/--vis)");
    std::tie(t_source, m_src) = project_to_uv(*in.image, *in.iuv, atlas);
  } else {
    throw std::runtime_error("infer: provide either an image+iuv or a partial texture+mask");
  }

  InferResult res;
  res.m_src = m_src;
  Mask m_uv = atlas.uv_mask();
  res.m_occ = occlusion_mask(m_uv, m_src);

  auto [t_mirror, m_mirror] = mirror_texture(t_source, m_src, atlas);
  res.t_input = compose_symmetric(t_source, m_src, t_mirror);
  res.t_input.clamp01();
  Mask m_vis(m_src.height, m_src.width);
  for (std::size_t i = 0; i < m_vis.data.size(); ++i)
    m_vis.data[i] = std::max(m_src.data[i], m_mirror.data[i]);

  nn::Var t_input = nn::to_var(res.t_input);
  nn::Var grid = sampler.forward(t_input, nn::to_var(m_vis), nn::to_var(in.normal));
  res.t_sample = nn::to_texture(nn::grid_sample(t_input, grid).value());

  if (!opts.use_refiner || refiner == nullptr) {
    res.t_refine = res.t_sample;
    res.m_blend = Mask(m_src.height, m_src.width, 1.0f);
    res.t_final = res.t_sample;
  } else {
    auto out = refiner->forward(nn::to_var(res.t_sample), nn::to_var(res.m_occ));
    res.t_refine = nn::to_texture(out.texture.value());
    res.m_blend = nn::to_mask(out.blend_mask.value());
    if (opts.blend_override) {
      for (auto& v : res.m_blend.data) v = *opts.blend_override;
    }
    res.t_final = nn::blend(res.t_sample, res.t_refine, res.m_blend);
  }
  // the completed texture is only meaningful on the UV support
  for (int y = 0; y < res.t_final.height; ++y)
    for (int x = 0; x < res.t_final.width; ++x) {
      float m = m_uv.at(y, x);
      for (int c = 0; c < 3; ++c) res.t_final.at(y, x, c) *= m;
    }
  res.t_final.clamp01();
  return res;
}

/// Loads a sampler from a checkpoint written by train_sampler.
inline nn::SamplerNet load_sampler(const std::string& path, int resolution, int width) {
  Rng rng(0);
  nn::SamplerConfig scfg;
  scfg.resolution = resolution;
  scfg.base_width = width;
  nn::SamplerNet net(scfg, rng);
  nn::CheckpointMeta meta;
  auto blocks = nn::checkpoint_load(path, meta);
  nn::restore_params(net.params(), "sampler/", blocks);
  return net;
}

inline nn::RefinerNet load_refiner(const std::string& path, int resolution, int width) {
  Rng rng(0);
  nn::RefinerConfig rcfg;
  rcfg.resolution = resolution;
  rcfg.base_width = width;
  nn::RefinerNet net(rcfg, rng);
  nn::CheckpointMeta meta;
  auto blocks = nn::checkpoint_load(path, meta);
  nn::restore_params(net.params(), "refiner/", blocks);
  return net;
}

}  // namespace texc
