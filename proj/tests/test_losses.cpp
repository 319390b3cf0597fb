// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "vdc/fd_check.hpp"
#include "vdc/image_ops.hpp"
#include "vdc/losses.hpp"
#include "vdc/rng.hpp"

using namespace vdc;

namespace {

Tensor random_image(int w, int h, Rng& rng, bool requires_grad = false) {
  std::vector<double> v(size_t(w) * h * 3);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  return requires_grad ? Tensor::variable({size_t(w) * h, 3}, std::move(v))
                       : Tensor::constant({size_t(w) * h, 3}, std::move(v));
}

}  // namespace

TEST_CASE("masked_l2 hand arithmetic") {
  Tensor zero = Tensor::constant({2, 1}, {0.0, 0.0});
  Tensor x = Tensor::constant({2, 1}, {0.0, 1.0});

  Tensor full = Tensor::constant({2, 1}, {1.0, 1.0});
  CHECK(masked_l2(x, x, full).scalar_value() == 0.0);
  CHECK(masked_l2(x, zero, full).scalar_value() == doctest::Approx(0.5).epsilon(1e-15));

  Tensor half = Tensor::constant({2, 1}, {0.0, 1.0});
  CHECK(masked_l2(x, zero, half).scalar_value() == doctest::Approx(1.0).epsilon(1e-15));

  Tensor none = Tensor::constant({2, 1}, {0.0, 0.0});
  CHECK_THROWS_AS(masked_l2(x, zero, none), std::runtime_error);
}

TEST_CASE("masked_l2 averages channels and is normalization-invariant") {
  Rng rng(1);
  // Same residual on every unmasked pixel: halving the region keeps the value.
  int n = 8;
  std::vector<double> a(n * 3, 0.25), b(n * 3, 0.55);
  Tensor x = Tensor::constant({size_t(n), 3}, a);
  Tensor xh = Tensor::constant({size_t(n), 3}, b);
  Tensor full = Tensor::full({size_t(n), 1}, 1.0);
  std::vector<double> halfm(n, 0.0);
  for (int i = 0; i < n / 2; ++i) halfm[i] = 1.0;
  Tensor half = Tensor::constant({size_t(n), 1}, halfm);
  double v_full = masked_l2(x, xh, full).scalar_value();
  double v_half = masked_l2(x, xh, half).scalar_value();
  CHECK(v_full == doctest::Approx(0.3 * 0.3).epsilon(1e-12));
  CHECK(v_half == doctest::Approx(v_full).epsilon(1e-12));
}

TEST_CASE("perceptual proxy: identity, symmetry, frozen filters") {
  Rng rng(2);
  int w = 8, h = 8;
  Tensor x = random_image(w, h, rng);
  Tensor y = random_image(w, h, rng);

  PerceptualProxy proxy(7);
  CHECK(proxy.loss(x, x, w, h).scalar_value() == 0.0);
  double ab = proxy.loss(x, y, w, h).scalar_value();
  double ba = proxy.loss(y, x, w, h).scalar_value();
  CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
  CHECK(ab > 0.0);

  PerceptualProxy proxy_same(7);
  CHECK(proxy_same.loss(x, y, w, h).scalar_value() == ab);
  PerceptualProxy proxy_other(8);
  CHECK(proxy_other.loss(x, y, w, h).scalar_value() != ab);
}

TEST_CASE("perceptual proxy decreases along interpolation toward the target") {
  Rng rng(3);
  int w = 8, h = 8;
  Tensor x = random_image(w, h, rng);
  std::vector<double> pert(size_t(w) * h * 3);
  for (auto& v : pert) v = rng.uniform(-0.3, 0.3);
  PerceptualProxy proxy(11);
  auto at = [&](double s) {
    std::vector<double> v(x.values().begin(), x.values().end());
    for (size_t i = 0; i < v.size(); ++i) v[i] += s * pert[i];
    Tensor xh = Tensor::constant(x.shape(), std::move(v));
    return proxy.loss(x, xh, w, h).scalar_value();
  };
  double l10 = at(1.0), l05 = at(0.5), l00 = at(0.0);
  CHECK(l10 > l05);
  CHECK(l05 > l00);
  CHECK(l00 == 0.0);
}

TEST_CASE("perceptual proxy respects the spatial mask") {
  Rng rng(4);
  int w = 16, h = 16;
  Tensor x = random_image(w, h, rng);
  // Perturb the leftmost columns; the mask excludes the whole left half, so
  // the perturbation sits beyond the filters' bleed radius of the kept area.
  std::vector<double> v(x.values().begin(), x.values().end());
  std::vector<double> m(size_t(w) * h, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < 4; ++xx) {
      for (int c = 0; c < 3; ++c) v[(size_t(y) * w + xx) * 3 + c] += 0.4;
    }
    for (int xx = 0; xx < w / 2; ++xx) m[size_t(y) * w + xx] = 0.0;
  }
  Tensor xh = Tensor::constant(x.shape(), std::move(v));
  PerceptualProxy proxy(5);
  double unmasked = proxy.loss(x, xh, w, h).scalar_value();
  double masked = proxy.loss(x, xh, w, h, Tensor::constant({size_t(w) * h, 1}, m)).scalar_value();
  CHECK(unmasked > 0.0);
  CHECK(masked == 0.0);
}

TEST_CASE("latent delta regularizer arithmetic") {
  Tensor same = Tensor::constant({3, 4}, std::vector<double>(12, 0.7));
  CHECK(latent_delta_reg(same).scalar_value() == 0.0);

  Tensor two = Tensor::constant({2, 4}, {0, 0, 0, 0, 1, 0, 0, 0});
  CHECK(latent_delta_reg(two).scalar_value() == doctest::Approx(1.0).epsilon(1e-15));

  // ||d1||^2 = 2, ||d2||^2 = 3.
  Tensor three = Tensor::constant({3, 2}, {0.5, 0.5, 0.5 + 1.0, 0.5 + 1.0, 0.5 + 1.0, 0.5 + std::sqrt(2.0)});
  CHECK(latent_delta_reg(three).scalar_value() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("latent delta regularizer ignores a constant shift of all rows") {
  Rng rng(5);
  Tensor w = Tensor::constant({4, 6}, rng.normal_vec(24, 0.0, 1.0));
  std::vector<double> shifted(w.values().begin(), w.values().end());
  std::vector<double> shift = rng.normal_vec(6, 0.0, 1.0);
  for (size_t r = 0; r < 4; ++r) {
    for (size_t c = 0; c < 6; ++c) shifted[r * 6 + c] += shift[c];
  }
  Tensor w2 = Tensor::constant({4, 6}, std::move(shifted));
  CHECK(latent_delta_reg(w).scalar_value() ==
        doctest::Approx(latent_delta_reg(w2).scalar_value()).epsilon(1e-9));
}

TEST_CASE("blend sparsity arithmetic") {
  CHECK(blend_sparsity(Tensor::zeros({3, 4})).scalar_value() == 0.0);
  Tensor one_ray = Tensor::constant({1, 3}, {0.2, 0.3, 0.5});
  CHECK(blend_sparsity(one_ray).scalar_value() == doctest::Approx(1.0).epsilon(1e-15));

  // All pixels masked: no contributing rays.
  Tensor b = Tensor::constant({2, 3}, {0.2, 0.3, 0.5, 0.9, 0.9, 0.9});
  Tensor indist = Tensor::zeros({2, 1});
  CHECK(blend_sparsity(b, indist).scalar_value() == 0.0);
  Tensor keep_first = Tensor::constant({2, 1}, {1.0, 0.0});
  CHECK(blend_sparsity(b, keep_first).scalar_value() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("blend entropy values and symmetry") {
  Tensor half = Tensor::constant({1, 1}, {0.5});
  CHECK(blend_entropy(half).scalar_value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor edges = Tensor::constant({1, 2}, {0.0, 1.0});
  CHECK(blend_entropy(edges).scalar_value() == 0.0);

  Tensor quarter = Tensor::constant({1, 2}, {0.25, 0.25});
  CHECK(blend_entropy(quarter).scalar_value() == doctest::Approx(1.124670).epsilon(1e-6));

  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    double b = rng.uniform(0.0, 1.0);
    double hb = blend_entropy(Tensor::constant({1, 1}, {b})).scalar_value();
    double hb_flip = blend_entropy(Tensor::constant({1, 1}, {1.0 - b})).scalar_value();
    CHECK(hb == doctest::Approx(hb_flip).epsilon(1e-12));
    CHECK(hb <= std::log(2.0) + 1e-15);
  }
}

TEST_CASE("sr loss composition and non-negativity") {
  Rng rng(7);
  int w = 8, h = 8;
  PerceptualProxy proxy(13);
  Tensor x = random_image(w, h, rng);
  CHECK(sr_loss(x, x, w, h, proxy).scalar_value() == 0.0);

  Tensor xh = random_image(w, h, rng);
  Tensor ones = Tensor::full({size_t(w) * h, 1}, 1.0);
  double want = masked_l2(x, xh, ones).scalar_value() + proxy.loss(x, xh, w, h).scalar_value();
  CHECK(sr_loss(x, xh, w, h, proxy).scalar_value() == doctest::Approx(want).epsilon(1e-12));

  for (int i = 0; i < 100; ++i) {
    Tensor a = random_image(4, 4, rng);
    Tensor b = random_image(4, 4, rng);
    CHECK(sr_loss(a, b, 4, 4, proxy).scalar_value() >= 0.0);
  }
}

TEST_CASE("losses pass finite-difference checks") {
  Rng rng(8);
  int w = 4, h = 4;
  Tensor x = random_image(w, h, rng);
  Tensor xh = random_image(w, h, rng, true);
  Tensor m = Tensor::constant({size_t(w) * h, 1}, [&] {
    std::vector<double> v(size_t(w) * h);
    for (auto& e : v) e = rng.uniform() < 0.7 ? 1.0 : 0.0;
    return v;
  }());
  PerceptualProxy proxy(17);

  SUBCASE("masked_l2 + perceptual") {
    auto loss = [&] {
      return add(masked_l2(x, xh, m), proxy.loss(x, xh, w, h, m));
    };
    auto rep = finite_diff_check_full(loss, xh, 1e-5);
    INFO(rep.summary());
    CHECK(rep.max_rel_err <= 1e-5);
  }

  SUBCASE("latent delta") {
    Tensor wlat = Tensor::variable({3, 5}, rng.normal_vec(15, 0.0, 1.0));
    auto loss = [&] { return latent_delta_reg(wlat); };
    auto rep = finite_diff_check_full(loss, wlat, 1e-5);
    INFO(rep.summary());
    CHECK(rep.max_rel_err <= 1e-5);
  }

  SUBCASE("sparsity and entropy away from the poles") {
    std::vector<double> bv(12);
    for (auto& v : bv) v = rng.uniform(0.1, 0.9);
    Tensor b = Tensor::variable({3, 4}, std::move(bv));
    Tensor indist = Tensor::constant({3, 1}, {1.0, 0.0, 1.0});
    auto loss = [&] { return add(blend_sparsity(b, indist), blend_entropy(b)); };
    auto rep = finite_diff_check_full(loss, b, 1e-5);
    INFO(rep.summary());
    CHECK(rep.max_rel_err <= 1e-5);
  }

  SUBCASE("sr loss") {
    auto loss = [&] { return sr_loss(x, xh, w, h, proxy); };
    auto rep = finite_diff_check_full(loss, xh, 1e-5);
    INFO(rep.summary());
    CHECK(rep.max_rel_err <= 1e-5);
  }
}

TEST_CASE("image ops: conv, pool, upsample") {
  Rng rng(9);
  int w = 6, h = 4;

  SUBCASE("upsample of a constant image is constant, resolution doubles") {
    Tensor c = Tensor::full({size_t(w) * h, 3}, 0.37);
    Tensor up = upsample_bilinear2(c, w, h);
    CHECK(up.shape() == Shape{size_t(w) * h * 4, 3});
    for (double v : up.values()) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
  }

  SUBCASE("avgpool halves and averages") {
    std::vector<double> v(size_t(w) * h, 0.0);
    v[0] = 1.0;  // pixel (0,0)
    Tensor img = Tensor::constant({size_t(w) * h, 1}, std::move(v));
    Tensor pooled = avgpool2(img, w, h);
    CHECK(pooled.shape() == Shape{size_t(w) * h / 4, 1});
    CHECK(pooled.values()[0] == doctest::Approx(0.25).epsilon(1e-15));
  }

  SUBCASE("gradients through conv/pool/upsample match FD") {
    Tensor img = random_image(w, h, rng, true);
    Tensor weight = Tensor::variable({4, 3, 3, 3}, rng.normal_vec(4 * 27, 0.0, 0.3));
    Tensor bias = Tensor::variable({4}, rng.normal_vec(4, 0.0, 0.1));
    Rng wr(10);
    std::vector<double> wv(size_t(w) * h * 4 * 4);
    for (auto& v : wv) v = wr.uniform(-1.0, 1.0);
    Tensor mixw = Tensor::constant({size_t(w) * h * 4, 4}, wv);
    auto loss = [&] {
      Tensor f = conv3x3(img, w, h, weight, bias);
      Tensor up = upsample_bilinear2(f, w, h);
      Tensor down = avgpool2(up, 2 * w, 2 * h);
      Tensor up_mixed = mul(up, mixw);
      return add(sum(up_mixed), sum(mul(down, down)));
    };
    for (Tensor* p : {&img, &weight, &bias}) {
      auto rep = finite_diff_check_full(loss, *p, 1e-5);
      INFO(rep.summary());
      CHECK(rep.max_rel_err <= 1e-6);
    }
  }
}
