// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace vdc {

// Worker threads used by the BLAS backend and frame-parallel helpers.
// 1 (the default) is the deterministic reference configuration.
void set_num_threads(int n);
int num_threads();

}  // namespace vdc
