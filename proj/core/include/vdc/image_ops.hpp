// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vdc/tensor.hpp"

namespace vdc {

// Autodiff image ops on (H*W, C) tensors, row-major pixels.

// 3x3 convolution, stride 1, zero padding. weight: (Cout, Cin, 3, 3),
// bias: (Cout). Differentiable w.r.t. input, weight and bias.
Tensor conv3x3(const Tensor& input, int width, int height, const Tensor& weight,
               const Tensor& bias);

// 2x2 box average; width and height must be even.
Tensor avgpool2(const Tensor& input, int width, int height);

// Bilinear 2x upsampling with half-pixel mapping and clamped edges.
// Constant inputs stay constant (the weights sum to 1).
Tensor upsample_bilinear2(const Tensor& input, int width, int height);

}  // namespace vdc
