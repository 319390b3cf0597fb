// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>

#include "vdc/rng.hpp"
#include "vdc/tensor.hpp"

namespace vdc {

struct FdCheckReport {
  double max_rel_err = 0.0;
  size_t worst_param = 0;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_central = 0.0;
  std::string summary() const;
};

// Central-difference gradient check. loss_fn must rebuild its graph on every
// call and be deterministic. Probes n_probes randomly chosen coordinates
// across params and reports
//   max |analytic - cd| / max(|analytic|, |cd|, 1e-12).
// Reports only; never throws on a bad gradient. Run in F64 mode.
FdCheckReport finite_diff_check(const std::function<Tensor()>& loss_fn,
                                std::span<Tensor> params, double h, int n_probes, Rng& rng);

// Probes every parameter coordinate of a single tensor (small tensors only).
FdCheckReport finite_diff_check_full(const std::function<Tensor()>& loss_fn, Tensor param,
                                     double h);

}  // namespace vdc
