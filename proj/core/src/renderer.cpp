// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

SamplePoints sample_segments(const RayBatch& rays, const std::vector<double>& t_near,
                             const std::vector<double>& t_far, int k, bool jitter, Rng& rng) {
  size_t n = rays.count();
  SamplePoints sp;
  sp.n_rays = int(n);
  sp.k = k;
  sp.t.resize(n * k);
  sp.delta.resize(n * k);
  sp.positions.resize(n * k * 3);
  for (size_t r = 0; r < n; ++r) {
    double t0 = t_near[r], t1 = t_far[r];
    bool hit = t1 > t0;
    double dt = hit ? (t1 - t0) / k : 0.0;
    const double* o = rays.origins.data() + r * 3;
    const double* d = rays.dirs.data() + r * 3;
    for (int s = 0; s < k; ++s) {
      double offset = jitter ? rng.uniform() : 0.5;
      double tk = hit ? t0 + (s + offset) * dt : t1;
      size_t idx = r * size_t(k) + s;
      sp.t[idx] = tk;
      sp.delta[idx] = dt;
      sp.positions[idx * 3 + 0] = o[0] + tk * d[0];
      sp.positions[idx * 3 + 1] = o[1] + tk * d[1];
      sp.positions[idx * 3 + 2] = o[2] + tk * d[2];
    }
  }
  return sp;
}

Tensor reshape_nk(const Tensor& col, int n, int k) {
  return reshape(col, {size_t(n), size_t(k)});
}

}  // namespace

Tensor SamplePoints::depth_tensor() const {
  return Tensor::constant({size_t(n_rays), size_t(k)}, t);
}

Tensor SamplePoints::delta_tensor() const {
  return Tensor::constant({size_t(n_rays), size_t(k)}, delta);
}

Tensor SamplePoints::positions_tensor() const {
  return Tensor::constant({size_t(n_rays) * k, 3}, positions);
}

SamplePoints sample_along_ray(const RayBatch& rays, double near, double far, int k, bool jitter,
                              Rng& rng) {
  if (k < 2) fail("sample_along_ray needs k >= 2");
  if (!(near < far)) fail("sample_along_ray needs near < far");
  std::vector<double> t0(rays.count(), near), t1(rays.count(), far);
  return sample_segments(rays, t0, t1, k, jitter, rng);
}

SamplePoints sample_in_cube(const RayBatch& rays, double bound, int k, bool jitter, Rng& rng) {
  if (k < 2) fail("sample_in_cube needs k >= 2");
  if (bound <= 0.0) fail("sample_in_cube needs a positive bound");
  size_t n = rays.count();
  std::vector<double> t0(n, 0.0), t1(n, 0.0);
  for (size_t r = 0; r < n; ++r) {
    const double* o = rays.origins.data() + r * 3;
    const double* d = rays.dirs.data() + r * 3;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    bool miss = false;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(d[a]) < 1e-12) {
        if (std::abs(o[a]) > bound) miss = true;
        continue;
      }
      double ta = (-bound - o[a]) / d[a];
      double tb = (bound - o[a]) / d[a];
      if (ta > tb) std::swap(ta, tb);
      lo = std::max(lo, ta);
      hi = std::min(hi, tb);
    }
    if (miss || hi <= lo) {
      t0[r] = t1[r] = 0.0;  // delta 0: no contribution
    } else {
      t0[r] = lo;
      t1[r] = hi;
    }
  }
  return sample_segments(rays, t0, t1, k, jitter, rng);
}

RenderOutput render_from_samples(const FieldSamples& field, const SamplePoints& samples) {
  Tensor delta = samples.delta_tensor();
  Tensor sd = mul(field.density, delta);
  // Transmittance at the sample depth: full bins before it plus half its
  // own bin, so the homogeneous-medium render converges at O(1/K) instead
  // of telescoping exactly.
  Tensor trans = exp(neg(add(cumsum_exclusive(sd), mul(sd, Tensor::scalar(0.5, sd.dtype())))));
  Tensor alpha = 1.0 - exp(neg(sd));
  Tensor w = mul(trans, alpha);

  RenderOutput out;
  Tensor channels[3];
  for (int c = 0; c < 3; ++c) channels[c] = sum_axis(mul(w, field.color[c]), 1);
  out.color = concat_cols(std::span<const Tensor>(channels, 3));
  out.opacity = sum_axis(w, 1);
  out.opacity_in = out.opacity;
  out.opacity_ood = Tensor::zeros({size_t(samples.n_rays), 1});
  out.blend_map = Tensor::zeros({size_t(samples.n_rays), 1});
  out.depth = sum_axis(mul(w, samples.depth_tensor()), 1);
  return out;
}

RenderOutput composite_from_samples(const FieldSamples& in_field,
                                    const BlendedFieldSamples& ood_field,
                                    const SamplePoints& samples) {
  Tensor delta = samples.delta_tensor();
  Tensor sd_in = mul(in_field.density, delta);
  Tensor sd_ood = mul(ood_field.density, delta);
  Tensor sd_sum = add(sd_ood, sd_in);
  Tensor trans =
      exp(neg(add(cumsum_exclusive(sd_sum), mul(sd_sum, Tensor::scalar(0.5, sd_sum.dtype())))));
  Tensor alpha_in = 1.0 - exp(neg(sd_in));
  Tensor alpha_ood = 1.0 - exp(neg(sd_ood));
  Tensor w_ood = mul(mul(trans, ood_field.blend), alpha_ood);
  Tensor w_in = mul(mul(trans, 1.0 - ood_field.blend), alpha_in);

  RenderOutput out;
  Tensor channels[3];
  for (int c = 0; c < 3; ++c) {
    channels[c] =
        sum_axis(add(mul(w_ood, ood_field.color[c]), mul(w_in, in_field.color[c])), 1);
  }
  out.color = concat_cols(std::span<const Tensor>(channels, 3));
  out.opacity_in = sum_axis(w_in, 1);
  out.opacity_ood = sum_axis(w_ood, 1);
  out.opacity = add(out.opacity_in, out.opacity_ood);
  out.blend_map = out.opacity_ood;
  out.depth = sum_axis(mul(add(w_in, w_ood), samples.depth_tensor()), 1);
  return out;
}

FieldSamples eval_field(const TriPlane& tp, const MlpDecoder& decoder,
                        const SamplePoints& samples) {
  Tensor features = sample_triplane(tp, samples.positions_tensor());
  InDistSamples dec = decode_in(features, decoder);
  FieldSamples out;
  out.density = reshape_nk(dec.density, samples.n_rays, samples.k);
  for (int c = 0; c < 3; ++c) {
    out.color[c] = reshape_nk(slice_cols(dec.color, c, c + 1), samples.n_rays, samples.k);
  }
  return out;
}

BlendedFieldSamples eval_ood_field(const TriPlane& tp, const MlpDecoder& decoder,
                                   const Tensor& phi, const SamplePoints& samples) {
  Tensor features = sample_triplane(tp, samples.positions_tensor());
  OodSamples dec = decode_ood(features, phi, decoder);
  BlendedFieldSamples out;
  out.density = reshape_nk(dec.density, samples.n_rays, samples.k);
  out.blend = reshape_nk(dec.blend, samples.n_rays, samples.k);
  for (int c = 0; c < 3; ++c) {
    out.color[c] = reshape_nk(slice_cols(dec.color, c, c + 1), samples.n_rays, samples.k);
  }
  return out;
}

RenderOutput render_field(const TriPlane& tp, const MlpDecoder& decoder, const RayBatch& rays,
                          const RenderSettings& settings) {
  Rng rng(settings.seed);
  SamplePoints sp = sample_in_cube(rays, tp.bound, settings.k_samples, settings.jitter, rng);
  RenderOutput out = render_from_samples(eval_field(tp, decoder, sp), sp);
  out.width = rays.width;
  out.height = rays.height;
  return out;
}

RenderOutput render_ood_field(const TriPlane& tp, const MlpDecoder& decoder, const Tensor& phi,
                              const RayBatch& rays, const RenderSettings& settings) {
  Rng rng(settings.seed);
  SamplePoints sp = sample_in_cube(rays, tp.bound, settings.k_samples, settings.jitter, rng);
  BlendedFieldSamples field = eval_ood_field(tp, decoder, phi, sp);
  RenderOutput out = render_from_samples({field.density, field.color}, sp);
  out.width = rays.width;
  out.height = rays.height;
  return out;
}

RenderOutput render_composite(const TriPlane& tp_in, const MlpDecoder& dec_in,
                              const TriPlane& tp_ood, const MlpDecoder& dec_ood,
                              const Tensor& phi, const RayBatch& rays,
                              const RenderSettings& settings) {
  if (tp_in.bound != tp_ood.bound) fail("composite fields must share the same cube bounds");
  Rng rng(settings.seed);
  SamplePoints sp = sample_in_cube(rays, tp_in.bound, settings.k_samples, settings.jitter, rng);
  FieldSamples in_field = eval_field(tp_in, dec_in, sp);
  BlendedFieldSamples ood_field = eval_ood_field(tp_ood, dec_ood, phi, sp);
  RenderOutput out = composite_from_samples(in_field, ood_field, sp);
  out.width = rays.width;
  out.height = rays.height;
  return out;
}

}  // namespace vdc
