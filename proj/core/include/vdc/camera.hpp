// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

namespace vdc {

// Pinhole camera. Camera frame: +Z forward (toward the scene), +X right,
// +Y down, so image rows grow downward with world up rendered up.
// Intrinsics use normalized image coordinates: pixel (i,j) of a WxH image
// maps to ((i+0.5)/W, (j+0.5)/H).
// Packed form: 25 floats = 16 extrinsic (cam2world, row-major) then 9
// intrinsic (row-major).
struct Camera {
  std::array<double, 16> cam2world{};
  std::array<double, 9> intrinsics{};

  static Camera look_at(const std::array<double, 3>& eye, const std::array<double, 3>& target,
                        const std::array<double, 3>& up, double fx, double fy, double cx,
                        double cy);
  static Camera from_packed(std::span<const double> packed);  // 25 values
  std::array<double, 25> packed() const;

  std::array<double, 3> origin() const { return {cam2world[3], cam2world[7], cam2world[11]}; }

  // Rotation block orthonormal within 1e-6, intrinsics[2][2] == 1.
  void validate() const;
};

struct RayBatch {
  int width = 0, height = 0;   // 0x0 when not a full image grid
  std::vector<double> origins;  // 3 per ray
  std::vector<double> dirs;     // 3 per ray, unit norm
  size_t count() const { return dirs.size() / 3; }
};

// One ray per pixel through the pixel center, row-major pixel order.
// With an identity extrinsic and a centered principal point the middle of
// the image looks along +Z.
RayBatch generate_rays(const Camera& camera, int width, int height);

}  // namespace vdc
