// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace vdc::fastmath {

// Batched transcendentals used by the hot tensor ops. AVX2+FMA when the
// build target has it, scalar fallback otherwise; both paths use the same
// polynomial so results agree to ~1e-14 relative against libm.
//
// exp clamps its argument to [-700, 700] so results stay normal.
void exp_batch(const double* x, double* y, size_t n);
void sigmoid_batch(const double* x, double* y, size_t n);

// y = softplus(x); if dydx != nullptr also writes sigmoid(x), the exact
// derivative, sharing the range reduction.
void softplus_batch(const double* x, double* y, double* dydx, size_t n);

}  // namespace vdc::fastmath
