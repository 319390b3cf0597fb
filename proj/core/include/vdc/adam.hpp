// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "vdc/tensor.hpp"

namespace vdc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // 0 disables clipping; otherwise the global grad norm is clipped to this.
  double clip_norm = 0.0;
};

// Standard bias-corrected Adam over a fixed set of leaf parameters.
// step() consumes the accumulated gradients. Parameters that received no
// gradient this step are left untouched and their step count does not
// advance, so sparsely-updated parameters (e.g. per-frame latents) keep
// correct bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg);

  void step();
  void zero_grad();

  int64_t step_count(size_t param_idx) const { return state_[param_idx].step_count; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  struct State {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    int64_t step_count = 0;
  };

  std::vector<Tensor> params_;
  std::vector<State> state_;
  AdamConfig cfg_;
};

}  // namespace vdc
