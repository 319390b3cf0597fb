// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vdc/image.hpp"
#include "vdc/losses.hpp"

namespace vdc {

struct MetricsRow {
  double psnr = 0.0;
  double ssim = 0.0;
  double l2 = 0.0;  // plain MSE over [0,1] values
  double psnr_masked = 0.0;    // inside the OOD mask
  double psnr_unmasked = 0.0;  // outside it
};

// MSE over [0,1] images; region: nullptr for all pixels, otherwise a 0/1
// per-pixel selector. An empty region yields 0 (PSNR then caps at 99).
double image_mse(const Image& x, const Image& xhat, const std::vector<double>* region);

// 10 log10(1 / mse), capped at 99 dB when mse < 1e-10.
double psnr_from_mse(double mse);

// Mean SSIM over channels, 11x11 Gaussian window (sigma 1.5), standard
// constants, statistics over the valid (un-padded) region. Needs images of
// at least 11x11.
double compute_ssim(const Image& x, const Image& xhat);

MetricsRow compute_psnr_ssim(const Image& x, const Image& xhat, const MaskImage* mask);

}  // namespace vdc
