// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vdc/rng.hpp"
#include "vdc/tensor.hpp"

namespace vdc {

// Three axis-aligned feature planes spanning the cube [-bound, bound]^3.
// Plane layout is (R, R, C) with the first extent the row. Convention
// (fixed; checkpoints depend on it):
//   xy plane: row <- y, column <- x
//   xz plane: row <- z, column <- x
//   yz plane: row <- z, column <- y
// Each axis maps linearly onto [0, R-1]; queries outside the cube clamp to
// the boundary texels.
struct TriPlane {
  int resolution = 0;
  int channels = 0;
  double bound = 1.0;
  Tensor xy, xz, yz;

  static TriPlane zeros(int resolution, int channels, double bound);
  // Entries drawn from N(0, sigma^2); planes are requires_grad leaves.
  static TriPlane random(int resolution, int channels, double bound, Rng& rng, double sigma);

  std::vector<Tensor> parameters() const { return {xy, xz, yz}; }
  void check() const;
};

// Sum of the three bilinear plane reads at each query point.
// positions: (P, 3). Returns (P, C). Differentiable w.r.t. the plane
// entries and w.r.t. the positions.
Tensor sample_triplane(const TriPlane& tp, const Tensor& positions);

// Convenience single-point probe.
std::vector<double> sample_triplane_point(const TriPlane& tp, double x, double y, double z);

// Decoder heads: in-distribution (color 3 + density 1) or out-of-distribution
// (color 3 + density 1 + blend 1). Two hidden layers, softplus activations.
// Density uses softplus with the pre-activation clamped to [-30, 30]; color
// and blend use sigmoid.
struct MlpDecoder {
  enum class Head { InDist, OutOfDist };

  Head head = Head::InDist;
  int in_features = 0;
  std::vector<Tensor> weights;  // (fan_in, fan_out) per layer
  std::vector<Tensor> biases;   // (fan_out) per layer

  static constexpr int kHiddenWidth = 64;
  static constexpr int kHiddenLayers = 2;

  // All entries drawn from N(0, sigma_init^2) as requires_grad leaves.
  static MlpDecoder create(Head head, int in_features, Rng& rng, double sigma_init);

  int output_width() const { return head == Head::InDist ? 4 : 5; }
  std::vector<Tensor> parameters() const;
  void freeze();

  // Raw last-layer output for a (P, in_features) batch.
  Tensor forward(const Tensor& batch) const;
};

struct InDistSamples {
  Tensor color;    // (P, 3) in [0,1]
  Tensor density;  // (P, 1) >= 0
};

struct OodSamples {
  Tensor color;    // (P, 3)
  Tensor density;  // (P, 1)
  Tensor blend;    // (P, 1) in (0,1)
};

// features: (P, C) from sample_triplane.
InDistSamples decode_in(const Tensor& features, const MlpDecoder& decoder);

// phi: per-frame latent, shape (D_phi); the decoder input is the
// concatenation of the tri-plane feature and phi.
OodSamples decode_ood(const Tensor& features, const Tensor& phi, const MlpDecoder& decoder);

}  // namespace vdc
