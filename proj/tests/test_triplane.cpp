// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "oracle.hpp"
#include "vdc/fd_check.hpp"
#include "vdc/rng.hpp"
#include "vdc/triplane.hpp"

using namespace vdc;

namespace {

// Writes a single channel value at (row, col) of a plane tensor.
void poke(Tensor& plane, int res, int ch, int row, int col, int c, double v) {
  plane.mutable_values()[(size_t(row) * res + col) * ch + c] = v;
}

}  // namespace

TEST_CASE("triplane sampling is exact at grid nodes") {
  Rng rng(1);
  TriPlane tp = TriPlane::random(4, 2, 1.0, rng, 0.5);
  // Node (ix, iy, iz) = (2, 1, 3) -> world coords via the linear map.
  auto world = [&](int i) { return -1.0 + 2.0 * i / 3.0; };
  double x = world(2), y = world(1), z = world(3);
  auto feat = sample_triplane_point(tp, x, y, z);
  for (int c = 0; c < 2; ++c) {
    double f1 = tp.xy.values()[(size_t(1) * 4 + 2) * 2 + c];  // row y, col x
    double f2 = tp.xz.values()[(size_t(3) * 4 + 2) * 2 + c];  // row z, col x
    double f3 = tp.yz.values()[(size_t(3) * 4 + 1) * 2 + c];  // row z, col y
    CHECK(feat[c] == doctest::Approx(f1 + f2 + f3).epsilon(1e-14));
  }
}

TEST_CASE("R=2 patch center averages the four corners") {
  TriPlane tp = TriPlane::zeros(2, 1, 1.0);
  tp.xy = Tensor::constant({2, 2, 1}, {0.0, 0.0, 0.0, 4.0});
  // Center of the cube: xz and yz planes are zero, xy contributes the
  // average of its corners.
  auto feat = sample_triplane_point(tp, 0.0, 0.0, 0.0);
  CHECK(feat[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("all-zero planes give a zero feature everywhere") {
  TriPlane tp = TriPlane::zeros(8, 3, 1.0);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    auto feat = sample_triplane_point(tp, rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                      rng.uniform(-2.0, 2.0));
    for (double f : feat) CHECK(f == 0.0);
  }
}

TEST_CASE("sampling is piecewise linear along an axis") {
  Rng rng(3);
  TriPlane tp = TriPlane::random(5, 1, 1.0, rng, 1.0);
  // Points on the grid line y = node 2, z = node 1: moving x within one cell
  // interpolates the two adjacent node reads linearly.
  auto world = [&](int i) { return -1.0 + 2.0 * i / 4.0; };
  double y = world(2), z = world(1);
  auto f0 = sample_triplane_point(tp, world(1), y, z);
  auto f1 = sample_triplane_point(tp, world(2), y, z);
  for (double a : {0.25, 0.5, 0.75}) {
    double x = world(1) + a * (world(2) - world(1));
    auto fm = sample_triplane_point(tp, x, y, z);
    CHECK(fm[0] == doctest::Approx((1 - a) * f0[0] + a * f1[0]).epsilon(1e-12));
  }
}

TEST_CASE("sampling matches an independent bilinear reference") {
  Rng rng(4);
  int res = 6;
  TriPlane tp = TriPlane::random(res, 1, 1.0, rng, 1.0);
  auto plane_vec = [&](const Tensor& t) {
    return std::vector<double>(t.values().begin(), t.values().end());
  };
  auto xy = plane_vec(tp.xy);
  auto xz = plane_vec(tp.xz);
  auto yz = plane_vec(tp.yz);
  for (int i = 0; i < 50; ++i) {
    double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0), z = rng.uniform(-1.0, 1.0);
    auto grid = [&](double v) { return (v + 1.0) * (res - 1) / 2.0; };
    double want = oracle::bilinear(xy, res, grid(x), grid(y)) +
                  oracle::bilinear(xz, res, grid(x), grid(z)) +
                  oracle::bilinear(yz, res, grid(y), grid(z));
    auto feat = sample_triplane_point(tp, x, y, z);
    CHECK(feat[0] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("out-of-bounds queries clamp to the boundary texels") {
  Rng rng(5);
  TriPlane tp = TriPlane::random(4, 2, 1.0, rng, 1.0);
  auto inside = sample_triplane_point(tp, 1.0, 0.3, -0.2);
  auto outside = sample_triplane_point(tp, 3.5, 0.3, -0.2);
  for (int c = 0; c < 2; ++c) CHECK(inside[c] == outside[c]);
}

TEST_CASE("channel permutation commutes with sampling") {
  Rng rng(6);
  int res = 4, ch = 3;
  TriPlane tp = TriPlane::random(res, ch, 1.0, rng, 1.0);
  // Permute channels (rotate by one) consistently on all planes.
  auto permute = [&](const Tensor& t) {
    std::vector<double> v(t.values().begin(), t.values().end());
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size() / ch; ++i) {
      for (int c = 0; c < ch; ++c) out[i * ch + (c + 1) % ch] = v[i * ch + c];
    }
    return Tensor::constant(t.shape(), std::move(out));
  };
  TriPlane tp2 = tp;
  tp2.xy = permute(tp.xy);
  tp2.xz = permute(tp.xz);
  tp2.yz = permute(tp.yz);
  auto f = sample_triplane_point(tp, 0.37, -0.61, 0.2);
  auto g = sample_triplane_point(tp2, 0.37, -0.61, 0.2);
  for (int c = 0; c < ch; ++c) CHECK(g[(c + 1) % ch] == doctest::Approx(f[c]).epsilon(1e-14));
}

TEST_CASE("triplane gradients match finite differences") {
  Rng rng(7);
  TriPlane tp = TriPlane::random(3, 2, 1.0, rng, 0.5);
  std::vector<double> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(rng.uniform(-0.9, 0.9));
  Tensor pos = Tensor::variable({4, 3}, std::move(pts));
  std::vector<double> w(8);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  Tensor weights = Tensor::constant({4, 2}, std::move(w));
  auto loss = [&] { return sum(mul(sample_triplane(tp, pos), weights)); };

  auto rep_plane = finite_diff_check_full(loss, tp.xy, 1e-5);
  INFO(rep_plane.summary());
  CHECK(rep_plane.max_rel_err <= 1e-6);
  // Positions stay away from cell edges so the FD step does not cross a knee.
  auto rep_pos = finite_diff_check_full(loss, pos, 1e-5);
  INFO(rep_pos.summary());
  CHECK(rep_pos.max_rel_err <= 1e-6);
}

TEST_CASE("in-distribution decode at zero weights") {
  Rng rng(8);
  MlpDecoder dec = MlpDecoder::create(MlpDecoder::Head::InDist, 16, rng, 0.0);
  Tensor features = Tensor::zeros({2, 16});
  auto s = decode_in(features, dec);
  for (double c : s.color.values()) CHECK(c == doctest::Approx(0.5).epsilon(1e-12));
  for (double d : s.density.values()) CHECK(d == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("density clamp floor keeps softplus positive and tiny") {
  // softplus(-30) = log1p(exp(-30)) ~ 9.36e-14.
  Tensor pre = Tensor::constant({1, 1}, {-30.0});
  Tensor d = softplus(clamp(pre, -30.0, 30.0));
  CHECK(d.values()[0] > 0.0);
  CHECK(d.values()[0] == doctest::Approx(9.357622968840175e-14).epsilon(1e-6));
}

TEST_CASE("decoder gradient w.r.t. first-layer weight passes FD") {
  Rng rng(9);
  MlpDecoder dec = MlpDecoder::create(MlpDecoder::Head::InDist, 4, rng, 0.3);
  Tensor features = Tensor::constant({3, 4}, rng.normal_vec(12, 0.0, 1.0));
  auto loss = [&] {
    auto s = decode_in(features, dec);
    return add(sum(s.color), sum(s.density));
  };
  auto rep = finite_diff_check_full(loss, dec.weights[0], 1e-5);
  INFO(rep.summary());
  CHECK(rep.max_rel_err <= 1e-6);
}

TEST_CASE("decode_in rejects width mismatches and wrong heads") {
  Rng rng(10);
  MlpDecoder dec = MlpDecoder::create(MlpDecoder::Head::InDist, 16, rng, 0.1);
  CHECK_THROWS_AS(decode_in(Tensor::zeros({2, 12}), dec), std::invalid_argument);
  CHECK_THROWS_AS(decode_ood(Tensor::zeros({2, 16}), Tensor::zeros({32}), dec),
                  std::invalid_argument);
}

TEST_CASE("ood decode blend is sigmoid(0)=0.5 at zero weights") {
  Rng rng(11);
  MlpDecoder dec = MlpDecoder::create(MlpDecoder::Head::OutOfDist, 48, rng, 0.0);
  auto s = decode_ood(Tensor::zeros({3, 16}), Tensor::zeros({32}), dec);
  for (double b : s.blend.values()) CHECK(b == 0.5);
}

TEST_CASE("ood decode is pure and depends on phi") {
  Rng rng(12);
  MlpDecoder dec = MlpDecoder::create(MlpDecoder::Head::OutOfDist, 20, rng, 0.2);
  Tensor features = Tensor::constant({4, 16}, rng.normal_vec(64, 0.0, 1.0));
  Tensor phi_a = Tensor::constant({4}, rng.normal_vec(4, 0.0, 1.0));
  Tensor phi_b = Tensor::constant({4}, rng.normal_vec(4, 0.0, 1.0));

  auto s1 = decode_ood(features, phi_a, dec);
  auto s2 = decode_ood(features, phi_a, dec);
  auto v1 = s1.color.values();
  auto v2 = s2.color.values();
  for (size_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == v2[i]);

  // Same tri-plane features, different phi: outputs change.
  auto s3 = decode_ood(features, phi_b, dec);
  bool any_diff = false;
  for (size_t i = 0; i < v1.size(); ++i) any_diff = any_diff || v1[i] != s3.color.values()[i];
  CHECK(any_diff);

  // Blend strictly inside (0,1) for moderate inputs.
  for (double b : s1.blend.values()) {
    CHECK(b > 0.0);
    CHECK(b < 1.0);
  }
}
