// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vdc/adam.hpp"
#include "vdc/checkpoint.hpp"
#include "vdc/fastmath.hpp"
#include "vdc/fd_check.hpp"
#include "vdc/rng.hpp"
#include "vdc/tensor.hpp"

using namespace vdc;

namespace {

Tensor random_var(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::variable(std::move(shape), std::move(v));
}

// Weighted sum so output grads are non-uniform. Takes the Rng by value so a
// forked stream yields identical weights on every call.
Tensor weighted_scalar(const Tensor& t, Rng rng) {
  std::vector<double> w(t.size());
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  Tensor weights = Tensor::constant(t.shape(), std::move(w));
  return sum(mul(t, weights));
}

}  // namespace

TEST_CASE("activation values at zero") {
  CHECK(sigmoid(Tensor::scalar(0.0)).scalar_value() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(softplus(Tensor::scalar(0.0)).scalar_value() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("sum of a 2x2 tensor of ones is 4") {
  Tensor t = Tensor::full({2, 2}, 1.0);
  CHECK(sum(t).scalar_value() == 4.0);
}

TEST_CASE("shape mismatch names both shapes and the op") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4});
  try {
    add(a, b);
    FAIL("expected a shape error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("(2,3)") != std::string::npos);
    CHECK(msg.find("(4)") != std::string::npos);
  }
}

TEST_CASE("log of non-positive input is a domain error in checked mode") {
  Tensor x = Tensor::constant({2}, {1.0, -0.5});
  CHECK_THROWS_AS(log(x), std::domain_error);
}

TEST_CASE("non-finite op result aborts in checked mode") {
  Tensor a = Tensor::scalar(1.0);
  Tensor b = Tensor::scalar(0.0);
  CHECK_THROWS_WITH_AS(div(a, b), doctest::Contains("div"), std::runtime_error);
}

TEST_CASE("backward of x^2 at x=3") {
  Tensor x = Tensor::variable({1}, {3.0});
  Tensor y = mul(x, x);
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("backward of sum(sigmoid(x)) at zero vector") {
  Tensor x = Tensor::variable({4}, {0.0, 0.0, 0.0, 0.0});
  backward(sum(sigmoid(x)));
  for (double g : x.grad()) CHECK(g == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar outputs and consumed tapes") {
  Tensor x = Tensor::variable({2}, {1.0, 2.0});
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(backward(y), std::invalid_argument);

  Tensor z = sum(mul(x, x));
  backward(z);
  CHECK_THROWS_AS(backward(z), std::runtime_error);

  // A second loss through a consumed subgraph must also fail loudly.
  Tensor h = mul(x, x);
  Tensor l1 = sum(h);
  backward(l1);
  Tensor l2 = sum(mul(h, h));
  CHECK_THROWS_AS(backward(l2), std::runtime_error);
}

TEST_CASE("graph evaluation is pure") {
  Rng rng(7);
  Tensor x = random_var({3, 5}, rng, -2.0, 2.0);
  Tensor w = random_var({5, 2}, rng, -1.0, 1.0);
  auto run = [&] {
    Tensor y = sigmoid(matmul(x, w));
    return std::vector<double>(y.values().begin(), y.values().end());
  };
  CHECK(run() == run());
}

// Gradient of every primitive op vs central differences, 64-bit, h=1e-5,
// inputs in [-2,2] away from non-smooth points.
TEST_CASE("finite differences across primitive ops") {
  const double h = 1e-5;
  const double tol = 1e-6;
  Rng rng(42);

  auto check_full = [&](const char* name, Tensor input, const std::function<Tensor()>& loss) {
    auto rep = finite_diff_check_full(loss, input, h);
    INFO(name << ": " << rep.summary());
    CHECK(rep.max_rel_err <= tol);
  };

  SUBCASE("elementwise binary, same shape") {
    Tensor a = random_var({3, 4}, rng, -2.0, 2.0);
    Tensor b = random_var({3, 4}, rng, 0.6, 2.0);
    Rng wr(1);
    auto loss = [&] { return weighted_scalar(div(mul(add(a, b), sub(a, b)), b), wr.fork(0)); };
    check_full("binary/a", a, loss);
    check_full("binary/b", b, loss);
  }

  SUBCASE("broadcast row, col, scalar") {
    Tensor a = random_var({4, 3}, rng, -2.0, 2.0);
    Tensor row = random_var({3}, rng, 0.5, 1.5);
    Tensor col = random_var({4, 1}, rng, 0.5, 1.5);
    Tensor s = random_var({1}, rng, 0.5, 1.5);
    Rng wr(2);
    auto loss = [&] { return weighted_scalar(div(mul(add(a, row), col), s), wr.fork(0)); };
    check_full("bcast/a", a, loss);
    check_full("bcast/row", row, loss);
    check_full("bcast/col", col, loss);
    check_full("bcast/scalar", s, loss);
  }

  SUBCASE("matmul") {
    Tensor a = random_var({3, 4}, rng, -2.0, 2.0);
    Tensor b = random_var({4, 2}, rng, -2.0, 2.0);
    Rng wr(3);
    auto loss = [&] { return weighted_scalar(matmul(a, b), wr.fork(0)); };
    check_full("matmul/a", a, loss);
    check_full("matmul/b", b, loss);
  }

  SUBCASE("transcendental unaries") {
    Tensor x = random_var({2, 6}, rng, -2.0, 2.0);
    Rng wr(4);
    auto loss = [&] {
      return weighted_scalar(add(exp(x), add(sigmoid(x), softplus(x))), wr.fork(0));
    };
    check_full("exp+sigmoid+softplus", x, loss);
  }

  SUBCASE("log and sqrt on positive inputs") {
    Tensor x = random_var({8}, rng, 0.2, 2.0);
    Rng wr(5);
    auto loss = [&] { return weighted_scalar(add(log(x), sqrt(x)), wr.fork(0)); };
    check_full("log+sqrt", x, loss);
  }

  SUBCASE("abs away from zero") {
    std::vector<double> v;
    for (int i = 0; i < 8; ++i) {
      double m = rng.uniform(0.3, 2.0);
      v.push_back(rng.uniform() < 0.5 ? -m : m);
    }
    Tensor x = Tensor::variable({8}, std::move(v));
    Rng wr(6);
    auto loss = [&] { return weighted_scalar(abs(x), wr.fork(0)); };
    check_full("abs", x, loss);
  }

  SUBCASE("clamp away from its knees") {
    std::vector<double> v = {-1.9, -1.2, -0.4, 0.0, 0.7, 1.1, 1.45, 1.9};
    Tensor x = Tensor::variable({8}, std::move(v));
    Rng wr(7);
    auto loss = [&] { return weighted_scalar(clamp(x, -1.5, 1.5), wr.fork(0)); };
    check_full("clamp", x, loss);
  }

  SUBCASE("binary entropy in the open interval") {
    Tensor x = random_var({10}, rng, 0.05, 0.95);
    Rng wr(8);
    auto loss = [&] { return weighted_scalar(binary_entropy(x), wr.fork(0)); };
    check_full("binary_entropy", x, loss);
  }

  SUBCASE("reductions and structure ops") {
    Tensor x = random_var({3, 4}, rng, -2.0, 2.0);
    Rng wr(9);
    auto loss = [&] {
      Tensor m = mean(x);
      Tensor rows = sum_axis(x, 1);
      Tensor cols = sum_axis(x, 0);
      Tensor cs = cumsum_exclusive(x);
      Tensor sl = slice_cols(x, 1, 3);
      Tensor parts[2] = {sl, rows};
      Tensor cc = concat_cols(std::span<const Tensor>(parts, 2));
      Tensor ga = gather_rows(x, {2, 0, 2});
      Tensor rs = reshape(x, {4, 3});
      Tensor acc = add(weighted_scalar(cs, wr.fork(1)), weighted_scalar(cc, wr.fork(2)));
      acc = add(acc, weighted_scalar(ga, wr.fork(3)));
      acc = add(acc, weighted_scalar(rs, wr.fork(4)));
      acc = add(acc, add(m, weighted_scalar(cols, wr.fork(5))));
      return acc;
    };
    check_full("structure", x, loss);
  }

  SUBCASE("broadcast_rows") {
    Tensor v = random_var({5}, rng, -1.0, 1.0);
    Rng wr(10);
    auto loss = [&] { return weighted_scalar(broadcast_rows(v, 4), wr.fork(0)); };
    check_full("broadcast_rows", v, loss);
  }
}

TEST_CASE("adam: zero grad leaves parameters unchanged") {
  Tensor p = Tensor::variable({3}, {1.0, -2.0, 0.5});
  AdamOptimizer opt({p}, {});
  backward(sum(mul(p, Tensor::zeros({3}))));
  opt.step();
  CHECK(p.values()[0] == 1.0);
  CHECK(p.values()[1] == -2.0);
  CHECK(p.values()[2] == 0.5);
}

TEST_CASE("adam: first bias-corrected step moves by about lr") {
  Tensor p = Tensor::variable({1}, {0.7});
  AdamConfig cfg;
  cfg.lr = 1e-3;
  AdamOptimizer opt({p}, cfg);
  backward(sum(p));  // grad = 1
  opt.step();
  // m_hat/sqrt(v_hat) == 1 on the first step up to epsilon.
  CHECK(p.values()[0] == doctest::Approx(0.7 - 1e-3).epsilon(1e-6));
}

TEST_CASE("adam: lr=0 is the identity") {
  Rng rng(3);
  Tensor p = random_var({6}, rng, -1.0, 1.0);
  std::vector<double> before(p.values().begin(), p.values().end());
  AdamConfig cfg;
  cfg.lr = 0.0;
  AdamOptimizer opt({p}, cfg);
  for (int i = 0; i < 3; ++i) {
    backward(weighted_scalar(mul(p, p), rng));
    opt.step();
    opt.zero_grad();
  }
  std::vector<double> after(p.values().begin(), p.values().end());
  CHECK(before == after);
}

TEST_CASE("adam: identical seeded runs are bit-identical") {
  auto run = [] {
    Rng rng(11);
    Tensor p = random_var({8}, rng, -1.0, 1.0);
    Tensor target = Tensor::constant({8}, rng.normal_vec(8, 0.0, 1.0));
    AdamConfig cfg;
    cfg.lr = 5e-2;
    AdamOptimizer opt({p}, cfg);
    for (int i = 0; i < 25; ++i) {
      Tensor d = sub(p, target);
      backward(sum(mul(d, d)));
      opt.step();
      opt.zero_grad();
    }
    return std::vector<double>(p.values().begin(), p.values().end());
  };
  CHECK(run() == run());
}

TEST_CASE("adam: non-finite gradient is rejected in checked mode") {
  Tensor p = Tensor::variable({1}, {1.0});
  AdamOptimizer opt({p}, {});
  // Forge a bad gradient directly on the node.
  backward(sum(p));
  set_checked_mode(true);
  const_cast<double&>(p.grad()[0]) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(opt.step(), std::runtime_error);
}

TEST_CASE("finite_diff_check on a quadratic is exact to roundoff") {
  Rng rng(5);
  Tensor p = random_var({10}, rng, -1.0, 1.0);
  auto loss = [&] { return sum(mul(p, p)); };
  Rng probe_rng(17);
  auto rep = finite_diff_check(loss, std::span<Tensor>(&p, 1), 1e-5, 30, probe_rng);
  CHECK(rep.max_rel_err <= 1e-9);
}

TEST_CASE("f32 mode rounds values through float") {
  Tensor t = Tensor::constant({2}, {0.1, 1.0 / 3.0}, Dtype::F32);
  CHECK(t.values()[0] == double(float(0.1)));
  Tensor u = add(t, t);
  CHECK(u.dtype() == Dtype::F32);
  CHECK(u.values()[1] == double(float(double(float(1.0 / 3.0)) * 2)));
  Tensor w = add(t, Tensor::scalar(1.0, Dtype::F64));
  CHECK(w.dtype() == Dtype::F64);
}

TEST_CASE("checkpoint round-trips tensors and is byte-stable") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "vdc_ckpt_test";
  fs::create_directories(dir);
  Rng rng(23);
  std::map<std::string, Tensor> entries;
  entries["triplane.xy"] = Tensor::constant({2, 2, 3}, rng.normal_vec(12, 0.0, 1.0));
  entries["phi.0"] = Tensor::constant({4}, rng.normal_vec(4, 0.0, 1.0), Dtype::F32);
  entries["meta.step"] = Tensor::scalar(42.0);

  fs::path p1 = dir / "a.ckpt";
  fs::path p2 = dir / "b.ckpt";
  save_checkpoint(p1, entries);
  save_checkpoint(p2, entries);
  CHECK(file_hash(p1) == file_hash(p2));

  auto loaded = load_checkpoint(p1);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded["meta.step"].scalar_value() == 42.0);
  CHECK(loaded["triplane.xy"].shape() == Shape{2, 2, 3});
  CHECK(loaded["phi.0"].dtype() == Dtype::F32);
  auto a = entries["triplane.xy"].values();
  auto b = loaded["triplane.xy"].values();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
  bad << "NOPE";
  bad.close();
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("fastmath kernels track libm") {
  Rng rng(31);
  size_t n = 4097;  // odd tail exercises the scalar remainder
  std::vector<double> x(n), y(n);
  for (size_t i = 0; i < n; ++i) x[i] = rng.uniform(-40.0, 40.0);
  fastmath::exp_batch(x.data(), y.data(), n);
  for (size_t i = 0; i < n; ++i) {
    CHECK(std::abs(y[i] - std::exp(x[i])) <= 1e-13 * std::exp(x[i]));
  }
  fastmath::sigmoid_batch(x.data(), y.data(), n);
  for (size_t i = 0; i < n; ++i) {
    double ref = 1.0 / (1.0 + std::exp(-x[i]));
    CHECK(y[i] == doctest::Approx(ref).epsilon(1e-13));
  }
  std::vector<double> d(n);
  fastmath::softplus_batch(x.data(), y.data(), d.data(), n);
  for (size_t i = 0; i < n; ++i) {
    double ref = x[i] > 0 ? x[i] + std::log1p(std::exp(-x[i])) : std::log1p(std::exp(x[i]));
    CHECK(y[i] == doctest::Approx(ref).epsilon(1e-12));
    CHECK(d[i] == doctest::Approx(1.0 / (1.0 + std::exp(-x[i]))).epsilon(1e-12));
  }
}
