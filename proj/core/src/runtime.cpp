// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/runtime.hpp"

#include <atomic>

#ifdef VDC_USE_CBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace vdc {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) {
  if (n < 1) n = 1;
  g_threads.store(n, std::memory_order_relaxed);
#ifdef VDC_USE_CBLAS
  openblas_set_num_threads(n);
#endif
}

int num_threads() { return g_threads.load(std::memory_order_relaxed); }

}  // namespace vdc
