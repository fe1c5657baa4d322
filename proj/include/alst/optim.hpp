#pragma once

#include <cstdint>

#include "alst/model.hpp"

namespace alst {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, shaped like the model.
struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t steps = 0;

  static AdamState for_model(const ModelParams& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

/// One bias-corrected Adam update at step t (1-based). Rejects non-finite
/// gradients before touching params or state.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               std::uint64_t t, const AdamConfig& cfg = {});

/// Rescales grads in place so their global norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(ModelParams& grads, double max_norm);

}  // namespace alst
