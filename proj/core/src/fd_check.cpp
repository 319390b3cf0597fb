// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/fd_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace vdc {

namespace {

struct Probe {
  size_t param;
  size_t index;
};

FdCheckReport run_probes(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                         double h, const std::vector<Probe>& probes) {
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);
  std::vector<std::vector<double>> analytic(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].has_grad()) {
      auto g = params[i].grad();
      analytic[i].assign(g.begin(), g.end());
    } else {
      analytic[i].assign(params[i].size(), 0.0);
    }
    params[i].zero_grad();
  }

  FdCheckReport report;
  for (const Probe& pr : probes) {
    auto vals = params[pr.param].mutable_values();
    double saved = vals[pr.index];
    vals[pr.index] = saved + h;
    double lp = loss_fn().scalar_value();
    vals[pr.index] = saved - h;
    double lm = loss_fn().scalar_value();
    vals[pr.index] = saved;
    double cd = (lp - lm) / (2.0 * h);
    double an = analytic[pr.param][pr.index];
    double denom = std::max({std::abs(an), std::abs(cd), 1e-12});
    double rel = std::abs(an - cd) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_param = pr.param;
      report.worst_index = pr.index;
      report.worst_analytic = an;
      report.worst_central = cd;
    }
  }
  return report;
}

}  // namespace

std::string FdCheckReport::summary() const {
  std::ostringstream os;
  os << "max_rel_err=" << max_rel_err << " at param " << worst_param << "[" << worst_index
     << "] analytic=" << worst_analytic << " central=" << worst_central;
  return os.str();
}

FdCheckReport finite_diff_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                                double h, int n_probes, Rng& rng) {
  std::vector<Probe> probes;
  probes.reserve(size_t(n_probes));
  for (int i = 0; i < n_probes; ++i) {
    size_t p = params.size() == 1 ? 0 : rng.index(params.size());
    probes.push_back({p, rng.index(params[p].size())});
  }
  return run_probes(loss_fn, params, h, probes);
}

FdCheckReport finite_diff_check_full(const std::function<Tensor()>& loss_fn, Tensor param,
                                     double h) {
  std::vector<Probe> probes;
  probes.reserve(param.size());
  for (size_t i = 0; i < param.size(); ++i) probes.push_back({0, i});
  Tensor arr[1] = {param};
  return run_probes(loss_fn, std::span<Tensor>(arr, 1), h, probes);
}

}  // namespace vdc
