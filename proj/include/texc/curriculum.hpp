#pragma once

// Curriculum policy for sampler training: step counting from the iteration
// counter, the alpha progression, and the data-source switch at step 3.

#include <stdexcept>

#include "texc/augment.hpp"
#include "texc/rng.hpp"

namespace texc {

enum class SourceKind { Augment, DensePoseFixture };

struct CurriculumState {
  long long iteration = 0;
  int iters_per_step = 4000;
  float delta = 0.025f;
  float densepose_mix = 0.5f;  // probability of a fixture source at step >= 3

  void validate() const {
    if (iteration < 0) throw std::invalid_argument("curriculum: negative iteration");
    if (iters_per_step <= 0) throw std::invalid_argument("curriculum: iters_per_step <= 0");
    if (densepose_mix < 0.0f || densepose_mix > 1.0f)
      throw std::invalid_argument("curriculum: densepose_mix outside [0,1]");
  }
};

inline int current_step(const CurriculumState& state) {
  state.validate();
  return static_cast<int>(state.iteration / state.iters_per_step);
}

inline float current_alpha(const CurriculumState& state) {
  return alpha_schedule(current_step(state), state.delta);
}

/// Before step 3 the source is always the augmented ground truth; from step 3
/// on, fixture-projected partial textures are mixed in when available.
inline SourceKind select_source(const CurriculumState& state, Rng& rng,
                                bool has_densepose_fixtures) {
  if (current_step(state) < 3) return SourceKind::Augment;
  if (!has_densepose_fixtures) return SourceKind::Augment;
  return rng.bernoulli(state.densepose_mix) ? SourceKind::DensePoseFixture : SourceKind::Augment;
}

}  // namespace texc
