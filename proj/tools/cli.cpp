// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdio>

namespace vdc::cli {

int run_command(int argc, const char* const* argv) {
  (void)argc;
  (void)argv;
  std::fprintf(stderr, "error: CLI not wired up yet\n");
  return 1;
}

}  // namespace vdc::cli
