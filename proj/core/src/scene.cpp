// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

SceneParams decode_scene_params(std::span<const double> latent, size_t rows, size_t dim) {
  if (dim < 10 || latent.size() != rows * dim) {
    fail("scene latent must be (L,D) with D >= 10");
  }
  std::array<double, 10> u{};
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < 10; ++c) u[c] += latent[r * dim + c];
  }
  for (auto& v : u) v /= double(rows);

  SceneParams p;
  for (int i = 0; i < 3; ++i) p.center[i] = 0.25 * u[i];
  for (int i = 0; i < 3; ++i) p.radii[i] = std::clamp(0.45 + 0.18 * u[3 + i], 0.08, 0.85);
  for (int i = 0; i < 3; ++i) p.base_color[i] = 0.55 + 0.22 * u[6 + i];
  p.grad_strength = 0.6 * u[9];
  return p;
}

SceneParams decode_scene_params(const Tensor& w) {
  if (w.rank() != 2) fail("scene latent must be rank 2, got " + shape_str(w.shape()));
  return decode_scene_params(w.values(), w.shape()[0], w.shape()[1]);
}

void analytic_field(const SceneParams& scene, const double* x, double* color3, double* sigma) {
  double q = 0.0;
  for (int i = 0; i < 3; ++i) {
    double d = (x[i] - scene.center[i]) / scene.radii[i];
    q += d * d;
  }
  *sigma = kSceneSigmaMax * stable_sigmoid((1.0 - q) / kSceneTau);
  double mod = 1.0 + scene.grad_strength * (x[1] - scene.center[1]);
  for (int i = 0; i < 3; ++i) color3[i] = std::clamp(scene.base_color[i] * mod, 0.0, 1.0);
}

OccluderParams::Pose OccluderParams::pose(int frame) const {
  double u = n_frames > 1 ? double(frame) / (n_frames - 1) : 0.0;
  Pose p;
  for (int i = 0; i < 3; ++i) p.center[i] = start[i] + u * (end[i] - start[i]);
  p.center[1] += bob_amplitude * std::sin(2.0 * std::numbers::pi * u);
  p.yaw = spin_rate * frame;
  return p;
}

void analytic_occluder(const OccluderParams& occ, int frame, const double* x, double* color3,
                       double* sigma) {
  if (frame < 0 || frame >= occ.n_frames) {
    fail("occluder frame " + std::to_string(frame) + " outside [0," +
         std::to_string(occ.n_frames) + ")");
  }
  OccluderParams::Pose pose = occ.pose(frame);
  // Into the occluder's local frame (rotation about +y by -yaw).
  double dx = x[0] - pose.center[0];
  double dy = x[1] - pose.center[1];
  double dz = x[2] - pose.center[2];
  double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  double lx = cy * dx - sy * dz;
  double ly = dy;
  double lz = sy * dx + cy * dz;

  double dist = 0.0;
  if (occ.kind == OccluderKind::Box) {
    double qx = std::abs(lx) - occ.half_extent[0];
    double qy = std::abs(ly) - occ.half_extent[1];
    double qz = std::abs(lz) - occ.half_extent[2];
    double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0), oz = std::max(qz, 0.0);
    dist = std::sqrt(ox * ox + oy * oy + oz * oz) + std::min(std::max({qx, qy, qz}), 0.0);
  } else {
    double ring = std::sqrt(lx * lx + lz * lz) - occ.half_extent[0];
    dist = std::sqrt(ring * ring + ly * ly) - occ.half_extent[1];
  }
  *sigma = occ.sigma_max * stable_sigmoid(-dist / occ.soft_width);
  for (int i = 0; i < 3; ++i) color3[i] = occ.color[i];
}

Image oracle_render(const SceneParams& scene, const OccluderParams* occluder, int frame,
                    const Camera& camera, int width, int height, int k_samples, double bound,
                    OracleMode mode) {
  bool opacity_only = mode == OracleMode::OccluderOpacity || mode == OracleMode::SceneOpacity;
  Image img = Image::zeros(width, height, opacity_only ? 1 : 3);
  if ((mode == OracleMode::Composite || mode == OracleMode::OccluderOpacity) && !occluder) {
    if (mode == OracleMode::OccluderOpacity) return img;  // nothing there: opacity 0
  }
  RayBatch rays = generate_rays(camera, width, height);

  for (size_t r = 0; r < rays.count(); ++r) {
    const double* o = rays.origins.data() + r * 3;
    const double* d = rays.dirs.data() + r * 3;
    // Cube slab clip.
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
    if (miss || hi <= lo) continue;

    double dt = (hi - lo) / k_samples;
    double accum = 0.0;
    double out[3] = {0.0, 0.0, 0.0};
    double opacity = 0.0;
    for (int k = 0; k < k_samples; ++k) {
      double t = lo + (k + 0.5) * dt;
      double x[3] = {o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]};
      double cs[3], co[3];
      double sigma_s = 0.0, sigma_o = 0.0;
      if (mode != OracleMode::OccluderOpacity) analytic_field(scene, x, cs, &sigma_s);
      if (occluder && mode != OracleMode::SceneOnly && mode != OracleMode::SceneOpacity) {
        analytic_occluder(*occluder, frame, x, co, &sigma_o);
      }
      double sigma = sigma_s + sigma_o;
      double sd = sigma * dt;
      double trans = std::exp(-(accum + 0.5 * sd));
      double alpha = 1.0 - std::exp(-sd);
      if (!opacity_only && sigma > 0.0) {
        // Emission-weighted mix of the two media.
        for (int c = 0; c < 3; ++c) {
          double emit = (sigma_s * cs[c] + sigma_o * (occluder ? co[c] : 0.0)) / sigma;
          out[c] += trans * alpha * emit;
        }
      }
      opacity += trans * alpha;
      accum += sd;
    }
    if (opacity_only) {
      img.px[r] = opacity;
    } else {
      for (int c = 0; c < 3; ++c) img.px[r * 3 + c] = out[c];
    }
  }
  return img;
}

size_t oracle_silhouette_area(const SceneParams& scene, const Camera& camera, int width,
                              int height, int k_samples, double bound) {
  Image op = oracle_render(scene, nullptr, 0, camera, width, height, k_samples, bound,
                           OracleMode::SceneOpacity);
  size_t count = 0;
  for (double v : op.px) count += v > 0.5;
  return count;
}

}  // namespace vdc
