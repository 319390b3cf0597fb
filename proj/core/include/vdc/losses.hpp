// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "vdc/image.hpp"
#include "vdc/rng.hpp"
#include "vdc/tensor.hpp"

namespace vdc {

// Binary per-pixel mask. 1 marks out-of-distribution pixels (the occluder);
// the complement marks in-distribution pixels.
struct MaskImage {
  int width = 0, height = 0;
  std::vector<double> ood;  // H*W values in {0,1}

  // Thresholds at 0.5; intended for 0/255 PGM masks.
  static MaskImage from_image(const Image& img);

  size_t ood_count() const;
  size_t indist_count() const { return size_t(width) * height - ood_count(); }

  Tensor ood_tensor() const;     // (N,1), 1 on OOD pixels (M)
  Tensor indist_tensor() const;  // (N,1), 1 on in-distribution pixels (1-M)
  std::vector<uint32_t> ood_rows() const;

  // 1 within `radius` (chebyshev) of any OOD pixel.
  std::vector<uint8_t> dilated(int radius) const;
};

// Mean squared error over mask-selected pixels:
//   sum_p m_p * mean_c (x - xhat)^2 / sum_p m_p.
// x, xhat: (N,C); m: (N,1) weights in {0,1}. Throws when the mask selects
// nothing (callers are expected to skip such frames).
Tensor masked_l2(const Tensor& x, const Tensor& xhat, const Tensor& m);

// Structural image distance from a frozen bank of random 3x3 filters at two
// scales (full and half resolution). Feature maps are unit-normalized across
// channels per pixel; squared feature distances are averaged with the mask
// (downsampled to each scale) as spatial weights. Symmetric, zero at x==xhat.
class PerceptualProxy {
 public:
  explicit PerceptualProxy(uint64_t seed, int filters = 16);

  Tensor loss(const Tensor& x, const Tensor& xhat, int width, int height,
              const std::optional<Tensor>& mask = std::nullopt) const;

  int filter_count() const { return filters_; }

 private:
  int filters_;
  Tensor weight0_, bias0_;  // full-resolution bank
  Tensor weight1_, bias1_;  // half-resolution bank
};

// sum_{i>=1} ||w_i - w_0||^2 over the rows of an (L,D) latent.
Tensor latent_delta_reg(const Tensor& w);

// L1 of per-sample blend weights, restricted to rays whose pixel is outside
// the OOD mask when `indist` (N,1 indicator) is given. b: (N,K).
Tensor blend_sparsity(const Tensor& b, const std::optional<Tensor>& indist = std::nullopt);

// Binary entropy summed over all samples; pushes blends toward {0,1}.
Tensor blend_entropy(const Tensor& b);

// Super-resolution objective: unmasked MSE plus the unmasked perceptual term.
Tensor sr_loss(const Tensor& x, const Tensor& xhat, int width, int height,
               const PerceptualProxy& proxy);

}  // namespace vdc
