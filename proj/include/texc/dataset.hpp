#pragma once

// Fixture loading and training-example assembly: masking, curriculum-driven
// augmentation or dense-pose fixture selection, mirroring, and symmetric
// composition.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "texc/augment.hpp"
#include "texc/curriculum.hpp"
#include "texc/image_io.hpp"
#include "texc/uv_ops.hpp"

namespace texc {

struct FixtureSample {
  std::string id;
  TextureMap gt;
  Mask vis;
  TextureMap normal;
  bool has_densepose = false;
  TextureMap dp_texture;
  Mask dp_mask;
};

struct FixtureSet {
  Atlas atlas;
  Mask m_uv;
  RegionPartition partition;
  std::vector<FixtureSample> samples;
  bool has_densepose = false;

  int resolution() const { return atlas.size; }

  static FixtureSet load(const std::string& dir) {
    namespace fs = std::filesystem;
    FixtureSet set;
    set.atlas = read_atlas((fs::path(dir) / "atlas.txt").string());
    set.m_uv = set.atlas.uv_mask();
    set.partition = build_region_partition(set.m_uv, set.atlas);

    std::ifstream manifest((fs::path(dir) / "manifest.txt").string());
    if (!manifest) throw std::runtime_error("missing manifest: " + dir + "/manifest.txt");
    std::string line;
    while (std::getline(manifest, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      FixtureSample s;
      std::string tex, mask, normal, dp_tex, dp_mask;
      ss >> s.id >> tex >> mask >> normal;
      if (!ss) throw std::runtime_error("bad manifest line: " + line);
      s.gt = read_texture((fs::path(dir) / tex).string());
      s.vis = read_mask((fs::path(dir) / mask).string());
      s.normal = read_texture((fs::path(dir) / normal).string());
      if (ss >> dp_tex >> dp_mask) {
        s.dp_texture = read_texture((fs::path(dir) / dp_tex).string());
        s.dp_mask = read_mask((fs::path(dir) / dp_mask).string());
        s.has_densepose = true;
        set.has_densepose = true;
      }
      if (s.gt.height != set.atlas.size || s.vis.height != set.atlas.size)
        throw std::runtime_error("fixture resolution mismatch for sample " + s.id);
      set.samples.push_back(std::move(s));
    }
    if (set.samples.empty()) throw std::runtime_error("no fixtures listed in manifest: " + dir);
    return set;
  }
};

struct TrainingExample {
  TextureMap t_input;
  Mask m_vis;  // visibility of T_input (source coverage plus mirrored fill)
  Mask m_src;  // source coverage before mirroring
  TextureMap normal;
  TextureMap t_gt;
  int sample_index = 0;
  SourceKind source = SourceKind::Augment;
  bool augmented = false;
};

/// Builds one training pair: pick a fixture, choose the source per the
/// curriculum, optionally warp it, then mirror and compose symmetrically.
inline TrainingExample make_training_example(const FixtureSet& set, const CurriculumState& state,
                                             const AugmentConfig& aug, Rng& rng,
                                             int forced_index = -1) {
  TrainingExample ex;
  ex.sample_index = forced_index >= 0 ? forced_index
                                      : rng.uniform_int(0, static_cast<int>(set.samples.size()) - 1);
  const FixtureSample& s = set.samples[static_cast<std::size_t>(ex.sample_index)];

  ex.source = select_source(state, rng, set.has_densepose && s.has_densepose);
  float alpha = current_alpha(state);

  TextureMap t_source;
  if (ex.source == SourceKind::DensePoseFixture) {
    t_source = s.dp_texture;
    ex.m_src = s.dp_mask;
  } else {
    t_source = mask_ground_truth(s.gt, s.vis);
    ex.m_src = s.vis;
    bool draw = rng.bernoulli(aug.p_aug);
    if (draw && alpha > 0.0f) {
      t_source = region_wise_augment(t_source, set.partition, set.m_uv, alpha, rng, aug);
      ex.augmented = true;
    }
  }

  auto [t_mirror, m_mirror] = mirror_texture(t_source, ex.m_src, set.atlas);
  ex.t_input = compose_symmetric(t_source, ex.m_src, t_mirror);
  ex.t_input.clamp01();  // warped sources can leak slightly past m_src
  ex.m_vis = Mask(ex.m_src.height, ex.m_src.width);
  for (std::size_t i = 0; i < ex.m_vis.data.size(); ++i)
    ex.m_vis.data[i] = std::max(ex.m_src.data[i], m_mirror.data[i]);
  ex.normal = s.normal;
  ex.t_gt = s.gt;
  return ex;
}

}  // namespace texc
