// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations used as test oracles. These are
// written against plain arrays, independent of the tensor/autodiff path
// they are used to verify.

#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace oracle {

// Single-field volume rendering: C = sum_k T_k (1 - exp(-sigma_k d_k)) c_k,
// with T_k the transmittance at the sample depth (full bins before it plus
// half its own bin).
inline std::array<double, 3> render_ray(const std::vector<double>& sigma,
                                        const std::vector<std::array<double, 3>>& color,
                                        const std::vector<double>& delta) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  double accum = 0.0;
  for (size_t k = 0; k < sigma.size(); ++k) {
    double trans = std::exp(-(accum + 0.5 * sigma[k] * delta[k]));
    double alpha = 1.0 - std::exp(-sigma[k] * delta[k]);
    for (int c = 0; c < 3; ++c) out[c] += trans * alpha * color[k][c];
    accum += sigma[k] * delta[k];
  }
  return out;
}

inline double render_ray_opacity(const std::vector<double>& sigma,
                                 const std::vector<double>& delta) {
  double accum = 0.0, opacity = 0.0;
  for (size_t k = 0; k < sigma.size(); ++k) {
    opacity += std::exp(-(accum + 0.5 * sigma[k] * delta[k])) *
               (1.0 - std::exp(-sigma[k] * delta[k]));
    accum += sigma[k] * delta[k];
  }
  return opacity;
}

// Composite rendering with a joint transmittance:
//   C = sum_k T^C_k [ b_k a^O_k c^O_k + (1-b_k) a^I_k c^I_k ],
//   a(x) = 1 - exp(-x), T^C at the sample depth with sigma^O + sigma^I.
inline std::array<double, 3> render_composite_ray(
    const std::vector<double>& sigma_in, const std::vector<std::array<double, 3>>& color_in,
    const std::vector<double>& sigma_ood, const std::vector<std::array<double, 3>>& color_ood,
    const std::vector<double>& blend, const std::vector<double>& delta) {
  std::array<double, 3> out{0.0, 0.0, 0.0};
  double accum = 0.0;
  for (size_t k = 0; k < sigma_in.size(); ++k) {
    double joint = (sigma_ood[k] + sigma_in[k]) * delta[k];
    double trans = std::exp(-(accum + 0.5 * joint));
    double a_in = 1.0 - std::exp(-sigma_in[k] * delta[k]);
    double a_ood = 1.0 - std::exp(-sigma_ood[k] * delta[k]);
    for (int c = 0; c < 3; ++c) {
      out[c] += trans * (blend[k] * a_ood * color_ood[k][c] +
                         (1.0 - blend[k]) * a_in * color_in[k][c]);
    }
    accum += joint;
  }
  return out;
}

// Bilinear interpolation on a (R,R) single-channel grid, grid coords in
// [0, R-1], row-major rows.
inline double bilinear(const std::vector<double>& grid, int res, double col, double row) {
  int c0 = std::min(int(col), res - 2);
  int r0 = std::min(int(row), res - 2);
  double fc = col - c0, fr = row - r0;
  auto at = [&](int r, int c) { return grid[size_t(r) * res + c]; };
  return (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
         fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
}

}  // namespace oracle
