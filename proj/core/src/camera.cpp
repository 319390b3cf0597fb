// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/camera.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

std::array<double, 3> normalize3(const std::array<double, 3>& v) {
  double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (n < 1e-12) fail("cannot normalize a zero-length vector");
  return {v[0] / n, v[1] / n, v[2] / n};
}

std::array<double, 3> cross3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Inverse of a general 3x3 (row-major).
std::array<double, 9> invert3(const std::array<double, 9>& m) {
  double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
  if (std::abs(det) < 1e-12) fail("non-invertible intrinsics");
  double inv = 1.0 / det;
  return {(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv,
          (m[1] * m[5] - m[2] * m[4]) * inv, (m[5] * m[6] - m[3] * m[8]) * inv,
          (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
          (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv,
          (m[0] * m[4] - m[1] * m[3]) * inv};
}

}  // namespace

Camera Camera::look_at(const std::array<double, 3>& eye, const std::array<double, 3>& target,
                       const std::array<double, 3>& up, double fx, double fy, double cx,
                       double cy) {
  std::array<double, 3> z =
      normalize3({target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]});
  // Camera +Y points down in world space so images come out upright.
  std::array<double, 3> down = {-up[0], -up[1], -up[2]};
  std::array<double, 3> x = normalize3(cross3(down, z));
  std::array<double, 3> y = cross3(z, x);
  Camera cam;
  cam.cam2world = {x[0], y[0], z[0], eye[0],
                   x[1], y[1], z[1], eye[1],
                   x[2], y[2], z[2], eye[2],
                   0.0,  0.0,  0.0,  1.0};
  cam.intrinsics = {fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0};
  cam.validate();
  return cam;
}

Camera Camera::from_packed(std::span<const double> packed) {
  if (packed.size() != 25) {
    fail("packed camera needs 25 values, got " + std::to_string(packed.size()));
  }
  Camera cam;
  for (int i = 0; i < 16; ++i) cam.cam2world[i] = packed[i];
  for (int i = 0; i < 9; ++i) cam.intrinsics[i] = packed[16 + i];
  cam.validate();
  return cam;
}

std::array<double, 25> Camera::packed() const {
  std::array<double, 25> out;
  for (int i = 0; i < 16; ++i) out[i] = cam2world[i];
  for (int i = 0; i < 9; ++i) out[16 + i] = intrinsics[i];
  return out;
}

void Camera::validate() const {
  // R R^T = I within 1e-6.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += cam2world[i * 4 + k] * cam2world[j * 4 + k];
      double want = i == j ? 1.0 : 0.0;
      if (std::abs(dot - want) > 1e-6) fail("camera rotation block is not orthonormal");
    }
  }
  if (std::abs(intrinsics[8] - 1.0) > 1e-9) fail("intrinsics[2][2] must be 1");
}

RayBatch generate_rays(const Camera& camera, int width, int height) {
  camera.validate();
  std::array<double, 9> kinv = invert3(camera.intrinsics);
  RayBatch rays;
  rays.width = width;
  rays.height = height;
  rays.origins.reserve(size_t(width) * height * 3);
  rays.dirs.reserve(size_t(width) * height * 3);
  const auto& m = camera.cam2world;
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      double u = (i + 0.5) / width;
      double v = (j + 0.5) / height;
      double dx = kinv[0] * u + kinv[1] * v + kinv[2];
      double dy = kinv[3] * u + kinv[4] * v + kinv[5];
      double dz = kinv[6] * u + kinv[7] * v + kinv[8];
      double n = std::sqrt(dx * dx + dy * dy + dz * dz);
      dx /= n;
      dy /= n;
      dz /= n;
      double wx = m[0] * dx + m[1] * dy + m[2] * dz;
      double wy = m[4] * dx + m[5] * dy + m[6] * dz;
      double wz = m[8] * dx + m[9] * dy + m[10] * dz;
      rays.origins.push_back(m[3]);
      rays.origins.push_back(m[7]);
      rays.origins.push_back(m[11]);
      rays.dirs.push_back(wx);
      rays.dirs.push_back(wy);
      rays.dirs.push_back(wz);
    }
  }
  return rays;
}

}  // namespace vdc
