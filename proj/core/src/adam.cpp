// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace vdc {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  state_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].is_leaf() || !params_[i].requires_grad()) {
      throw std::invalid_argument("vdc: AdamOptimizer parameters must be requires_grad leaves");
    }
    state_[i].first_moment.assign(params_[i].size(), 0.0);
    state_[i].second_moment.assign(params_[i].size(), 0.0);
  }
}

void AdamOptimizer::step() {
  double clip_scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Tensor& p : params_) {
      if (!p.has_grad()) continue;
      for (double g : p.grad()) sq += g * g;
    }
    double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / norm;
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    State& st = state_[i];
    auto grad = p.grad();
    if (checked_mode()) {
      for (double g : grad) {
        if (!std::isfinite(g)) throw std::runtime_error("vdc: non-finite gradient in adam step");
      }
    }
    st.step_count++;
    double bc1 = 1.0 - std::pow(cfg_.beta1, double(st.step_count));
    double bc2 = 1.0 - std::pow(cfg_.beta2, double(st.step_count));
    auto vals = p.mutable_values();
    bool f32 = p.dtype() == Dtype::F32;
    for (size_t j = 0; j < vals.size(); ++j) {
      double g = grad[j] * clip_scale;
      double m = st.first_moment[j] = cfg_.beta1 * st.first_moment[j] + (1.0 - cfg_.beta1) * g;
      double v = st.second_moment[j] = cfg_.beta2 * st.second_moment[j] + (1.0 - cfg_.beta2) * g * g;
      double update = cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.epsilon);
      double nv = vals[j] - update;
      vals[j] = f32 ? double(float(nv)) : nv;
    }
  }
}

void AdamOptimizer::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace vdc
