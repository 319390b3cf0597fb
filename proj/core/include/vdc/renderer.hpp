// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "vdc/camera.hpp"
#include "vdc/rng.hpp"
#include "vdc/tensor.hpp"
#include "vdc/triplane.hpp"

namespace vdc {

// Per-ray sample positions. Rectangular (n_rays x k); a ray that misses the
// scene bounds keeps its slots with delta = 0 so it contributes nothing.
struct SamplePoints {
  int n_rays = 0;
  int k = 0;
  std::vector<double> t;         // (n_rays*k) depths, strictly increasing per ray
  std::vector<double> delta;     // (n_rays*k) segment lengths, uniform per ray
  std::vector<double> positions; // (n_rays*k*3)

  Tensor depth_tensor() const;     // (N,K) constant
  Tensor delta_tensor() const;     // (N,K) constant
  Tensor positions_tensor() const; // (N*K,3) constant
};

// Uniform stratified depths on [near, far] for every ray. jitter off places
// samples at bin midpoints; jitter on draws one uniform offset per bin.
SamplePoints sample_along_ray(const RayBatch& rays, double near, double far, int k, bool jitter,
                              Rng& rng);

// Per-ray [near, far] from intersecting the cube [-bound, bound]^3 (slab
// test), so sampling effort is spent where the fields live.
SamplePoints sample_in_cube(const RayBatch& rays, double bound, int k, bool jitter, Rng& rng);

// Per-sample field values on a (N,K) grid, channels kept separate.
struct FieldSamples {
  Tensor density;                 // (N,K), >= 0
  std::array<Tensor, 3> color;    // each (N,K)
};

struct BlendedFieldSamples {
  Tensor density;
  std::array<Tensor, 3> color;
  Tensor blend;                   // (N,K) in [0,1]
};

struct RenderOutput {
  int width = 0, height = 0;  // 0x0 when rays are not a full image grid
  Tensor color;               // (N,3)
  Tensor opacity;             // (N,1): sum of all compositing weights
  Tensor opacity_in;          // (N,1): in-distribution share
  Tensor opacity_ood;         // (N,1): out-of-distribution share
  Tensor blend_map;           // (N,1): sum_k T^C * b * alpha^O
  Tensor depth;               // (N,1): expected depth (weight-averaged)
};

// Single-field volume rendering:
//   C = sum_k T(t_k) alpha(sigma_k delta_k) c_k,  alpha(x) = 1 - exp(-x),
// with T(t_k) the transmittance at the sample depth itself:
//   T(t_k) = exp(-(sum_{k'<k} sigma_{k'} delta_{k'} + sigma_k delta_k / 2)).
// Evaluating T at the midpoint (rather than the left bin edge) makes the
// homogeneous-medium render converge at O(1/K).
RenderOutput render_from_samples(const FieldSamples& field, const SamplePoints& samples);

// Two fields under a joint transmittance:
//   C = sum_k T^C(t_k) [ b alpha^O c^O + (1-b) alpha^I c^I ],
// T^C as above with sigma = sigma^O + sigma^I.
RenderOutput composite_from_samples(const FieldSamples& in_field,
                                    const BlendedFieldSamples& ood_field,
                                    const SamplePoints& samples);

// Field evaluation at sample positions (tri-plane read + decode).
FieldSamples eval_field(const TriPlane& tp, const MlpDecoder& decoder,
                        const SamplePoints& samples);
BlendedFieldSamples eval_ood_field(const TriPlane& tp, const MlpDecoder& decoder,
                                   const Tensor& phi, const SamplePoints& samples);

struct RenderSettings {
  int k_samples = 16;
  bool jitter = false;
  uint64_t seed = 0;
};

RenderOutput render_field(const TriPlane& tp, const MlpDecoder& decoder, const RayBatch& rays,
                          const RenderSettings& settings);
RenderOutput render_ood_field(const TriPlane& tp, const MlpDecoder& decoder, const Tensor& phi,
                              const RayBatch& rays, const RenderSettings& settings);
RenderOutput render_composite(const TriPlane& tp_in, const MlpDecoder& dec_in,
                              const TriPlane& tp_ood, const MlpDecoder& dec_ood,
                              const Tensor& phi, const RayBatch& rays,
                              const RenderSettings& settings);

}  // namespace vdc
