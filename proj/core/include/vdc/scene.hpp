// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <span>

#include "vdc/camera.hpp"
#include "vdc/image.hpp"
#include "vdc/tensor.hpp"

namespace vdc {

// Analytic latent-parameterized scene family: a soft ellipsoid with a base
// color modulated along +y. Serves both as the generator's training target
// and as a ground-truth oracle.
struct SceneParams {
  std::array<double, 3> center{};
  std::array<double, 3> radii{};
  std::array<double, 3> base_color{};
  double grad_strength = 0.0;
};

constexpr double kSceneSigmaMax = 12.0;
constexpr double kSceneTau = 0.12;

// Fixed linear map from the row-mean of an (L,D) latent (D >= 10) onto the
// scene parameters; the only non-linearity is the positivity clamp on the
// radii. Coordinates 0-2 drive the center, 3-5 the radii, 6-8 the base
// color, 9 the color gradient strength.
SceneParams decode_scene_params(std::span<const double> latent, size_t rows, size_t dim);
SceneParams decode_scene_params(const Tensor& w);

// Smooth ellipsoid density: sigma = sigma_max * sigmoid((1 - q(x)) / tau)
// with q the ellipsoid quadratic form; color = base * (1 + g*(y - c_y)),
// clamped to [0,1].
void analytic_field(const SceneParams& scene, const double* x, double* color3, double* sigma);

enum class OccluderKind { Box, Torus };

// Rigid occluder sweeping across the scene over the frame range.
struct OccluderParams {
  OccluderKind kind = OccluderKind::Box;
  std::array<double, 3> half_extent{0.16, 0.16, 0.16};  // torus: {major, minor, unused}
  std::array<double, 3> color{0.15, 0.75, 0.3};
  double soft_width = 0.015;
  double sigma_max = 12.0;
  int n_frames = 1;
  std::array<double, 3> start{-0.55, -0.05, 0.72};
  std::array<double, 3> end{0.55, 0.2, 0.72};
  double bob_amplitude = 0.12;  // vertical sine on top of the sweep
  double spin_rate = 0.15;      // radians per frame about +y

  struct Pose {
    std::array<double, 3> center;
    double yaw;
  };
  Pose pose(int frame) const;
};

// Soft signed-distance density of the occluder at its frame-t pose.
// Throws when frame is out of [0, n_frames).
void analytic_occluder(const OccluderParams& occ, int frame, const double* x, double* color3,
                       double* sigma);

enum class OracleMode {
  Composite,        // scene + occluder, physically mixed emission
  SceneOnly,        // occluder deleted
  OccluderOpacity,  // 1-channel occluder-alone opacity
  SceneOpacity,     // 1-channel scene-alone opacity
};

// Ground-truth renderer: direct ray march of the analytic fields over the
// scene cube, independent of the tensor/autodiff path. Composite mixes the
// two media physically (summed densities, emission-weighted color).
Image oracle_render(const SceneParams& scene, const OccluderParams* occluder, int frame,
                    const Camera& camera, int width, int height, int k_samples, double bound,
                    OracleMode mode);

// Pixels whose scene-alone opacity exceeds 0.5.
size_t oracle_silhouette_area(const SceneParams& scene, const Camera& camera, int width,
                              int height, int k_samples, double bound);

}  // namespace vdc
