// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace vdc::cli {

// Runs one CLI invocation. argv follows main() conventions (argv[0] is the
// program name). Returns the process exit code: 0 success, 1 runtime
// failure, 2 usage error.
int run_command(int argc, const char* const* argv);

}  // namespace vdc::cli
