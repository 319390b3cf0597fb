// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/triplane.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

struct AxisCoord {
  int lo = 0;        // lower texel
  double frac = 0.0; // interpolation weight toward lo+1
  bool clamped = false;
};

inline AxisCoord axis_coord(double v, int resolution, double bound) {
  double a = (v + bound) * (resolution - 1) / (2.0 * bound);
  AxisCoord c;
  if (a <= 0.0) {
    c.clamped = a < 0.0;
    a = 0.0;
  } else if (a >= double(resolution - 1)) {
    c.clamped = a > double(resolution - 1);
    a = double(resolution - 1);
  }
  c.lo = std::min(int(a), resolution - 2);
  c.frac = a - c.lo;
  return c;
}

}  // namespace

TriPlane TriPlane::zeros(int resolution, int channels, double bound) {
  if (resolution < 2 || channels < 1 || bound <= 0.0) fail("invalid tri-plane dimensions");
  TriPlane tp;
  tp.resolution = resolution;
  tp.channels = channels;
  tp.bound = bound;
  Shape shape{size_t(resolution), size_t(resolution), size_t(channels)};
  tp.xy = Tensor::zeros(shape);
  tp.xz = Tensor::zeros(shape);
  tp.yz = Tensor::zeros(shape);
  return tp;
}

TriPlane TriPlane::random(int resolution, int channels, double bound, Rng& rng, double sigma) {
  TriPlane tp = zeros(resolution, channels, bound);
  size_t n = size_t(resolution) * resolution * channels;
  Shape shape{size_t(resolution), size_t(resolution), size_t(channels)};
  tp.xy = Tensor::variable(shape, rng.normal_vec(n, 0.0, sigma));
  tp.xz = Tensor::variable(shape, rng.normal_vec(n, 0.0, sigma));
  tp.yz = Tensor::variable(shape, rng.normal_vec(n, 0.0, sigma));
  return tp;
}

void TriPlane::check() const {
  Shape want{size_t(resolution), size_t(resolution), size_t(channels)};
  if (xy.shape() != want || xz.shape() != want || yz.shape() != want) {
    fail("tri-plane tensors do not match the declared resolution/channels");
  }
  if (bound <= 0.0) fail("tri-plane bound must be positive");
}

Tensor sample_triplane(const TriPlane& tp, const Tensor& positions) {
  tp.check();
  if (positions.rank() != 2 || positions.shape()[1] != 3) {
    fail("sample_triplane positions must be (P,3), got " + shape_str(positions.shape()));
  }
  const size_t p_count = positions.shape()[0];
  const int res = tp.resolution;
  const int ch = tp.channels;
  const double bound = tp.bound;

  auto xy = unwrap(tp.xy);
  auto xz = unwrap(tp.xz);
  auto yz = unwrap(tp.yz);
  auto pos = unwrap(positions);

  std::vector<double> out(p_count * ch, 0.0);
  const double* pv = pos->values.data();

  auto accumulate_plane = [&](const std::vector<double>& plane, double col_v, double row_v,
                              double* dst) {
    AxisCoord cc = axis_coord(col_v, res, bound);
    AxisCoord rc = axis_coord(row_v, res, bound);
    double w00 = (1.0 - rc.frac) * (1.0 - cc.frac);
    double w01 = (1.0 - rc.frac) * cc.frac;
    double w10 = rc.frac * (1.0 - cc.frac);
    double w11 = rc.frac * cc.frac;
    const double* p00 = plane.data() + (size_t(rc.lo) * res + cc.lo) * ch;
    const double* p01 = p00 + ch;
    const double* p10 = p00 + size_t(res) * ch;
    const double* p11 = p10 + ch;
    for (int c = 0; c < ch; ++c) dst[c] += w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
  };

  for (size_t p = 0; p < p_count; ++p) {
    double x = pv[p * 3 + 0], y = pv[p * 3 + 1], z = pv[p * 3 + 2];
    double* dst = out.data() + p * ch;
    accumulate_plane(xy->values, x, y, dst);
    accumulate_plane(xz->values, x, z, dst);
    accumulate_plane(yz->values, y, z, dst);
  }

  return detail::make_node(
      "sample_triplane", {p_count, size_t(ch)}, std::move(out),
      {tp.xy, tp.xz, tp.yz, positions},
      [xy, xz, yz, pos, p_count, res, ch, bound](detail::Node& self) {
        const double* g = self.grad.data();
        const double* pv = pos->values.data();
        double* gxy = xy->requires_grad ? detail::grad_buffer(*xy) : nullptr;
        double* gxz = xz->requires_grad ? detail::grad_buffer(*xz) : nullptr;
        double* gyz = yz->requires_grad ? detail::grad_buffer(*yz) : nullptr;
        double* gpos = pos->requires_grad ? detail::grad_buffer(*pos) : nullptr;
        const double scale = (res - 1) / (2.0 * bound);

        auto backprop_plane = [&](const std::vector<double>& plane, double* gplane, double col_v,
                                  double row_v, const double* gout, double* gcol, double* grow) {
          AxisCoord cc = axis_coord(col_v, res, bound);
          AxisCoord rc = axis_coord(row_v, res, bound);
          size_t i00 = (size_t(rc.lo) * res + cc.lo) * ch;
          size_t i01 = i00 + ch;
          size_t i10 = i00 + size_t(res) * ch;
          size_t i11 = i10 + ch;
          double w00 = (1.0 - rc.frac) * (1.0 - cc.frac);
          double w01 = (1.0 - rc.frac) * cc.frac;
          double w10 = rc.frac * (1.0 - cc.frac);
          double w11 = rc.frac * cc.frac;
          for (int c = 0; c < ch; ++c) {
            double go = gout[c];
            if (gplane) {
              gplane[i00 + c] += w00 * go;
              gplane[i01 + c] += w01 * go;
              gplane[i10 + c] += w10 * go;
              gplane[i11 + c] += w11 * go;
            }
            if (gcol && !cc.clamped) {
              double d = (1.0 - rc.frac) * (plane[i01 + c] - plane[i00 + c]) +
                         rc.frac * (plane[i11 + c] - plane[i10 + c]);
              *gcol += go * d * scale;
            }
            if (grow && !rc.clamped) {
              double d = (1.0 - cc.frac) * (plane[i10 + c] - plane[i00 + c]) +
                         cc.frac * (plane[i11 + c] - plane[i01 + c]);
              *grow += go * d * scale;
            }
          }
        };

        for (size_t p = 0; p < p_count; ++p) {
          double x = pv[p * 3 + 0], y = pv[p * 3 + 1], z = pv[p * 3 + 2];
          const double* gout = g + p * ch;
          double gx = 0.0, gy = 0.0, gz = 0.0;
          backprop_plane(xy->values, gxy, x, y, gout, gpos ? &gx : nullptr, gpos ? &gy : nullptr);
          backprop_plane(xz->values, gxz, x, z, gout, gpos ? &gx : nullptr, gpos ? &gz : nullptr);
          backprop_plane(yz->values, gyz, y, z, gout, gpos ? &gy : nullptr, gpos ? &gz : nullptr);
          if (gpos) {
            gpos[p * 3 + 0] += gx;
            gpos[p * 3 + 1] += gy;
            gpos[p * 3 + 2] += gz;
          }
        }
      });
}

std::vector<double> sample_triplane_point(const TriPlane& tp, double x, double y, double z) {
  Tensor pos = Tensor::constant({1, 3}, {x, y, z});
  Tensor f = sample_triplane(tp, pos);
  return {f.values().begin(), f.values().end()};
}

MlpDecoder MlpDecoder::create(Head head, int in_features, Rng& rng, double sigma_init) {
  if (in_features < 1) fail("decoder needs at least one input feature");
  MlpDecoder d;
  d.head = head;
  d.in_features = in_features;
  int widths[kHiddenLayers + 2] = {in_features, kHiddenWidth, kHiddenWidth, 0};
  widths[kHiddenLayers + 1] = d.output_width();
  for (int l = 0; l < kHiddenLayers + 1; ++l) {
    size_t fan_in = size_t(widths[l]);
    size_t fan_out = size_t(widths[l + 1]);
    d.weights.push_back(
        Tensor::variable({fan_in, fan_out}, rng.normal_vec(fan_in * fan_out, 0.0, sigma_init)));
    d.biases.push_back(Tensor::variable({fan_out}, rng.normal_vec(fan_out, 0.0, sigma_init)));
  }
  return d;
}

std::vector<Tensor> MlpDecoder::parameters() const {
  std::vector<Tensor> out;
  for (size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  return out;
}

void MlpDecoder::freeze() {
  for (auto& w : weights) w.set_requires_grad(false);
  for (auto& b : biases) b.set_requires_grad(false);
}

Tensor MlpDecoder::forward(const Tensor& batch) const {
  if (batch.rank() != 2 || batch.shape()[1] != size_t(in_features)) {
    throw std::invalid_argument("vdc: decoder expects " + std::to_string(in_features) +
                                " input features, got " + shape_str(batch.shape()));
  }
  Tensor h = batch;
  for (size_t l = 0; l < weights.size(); ++l) {
    h = add(matmul(h, weights[l]), biases[l]);
    if (l + 1 < weights.size()) h = softplus(h);
  }
  return h;
}

InDistSamples decode_in(const Tensor& features, const MlpDecoder& decoder) {
  if (decoder.head != MlpDecoder::Head::InDist) {
    throw std::invalid_argument("vdc: decode_in needs an in-distribution decoder head");
  }
  Tensor out = decoder.forward(features);
  InDistSamples s;
  s.color = sigmoid(slice_cols(out, 0, 3));
  s.density = softplus(clamp(slice_cols(out, 3, 4), -30.0, 30.0));
  return s;
}

OodSamples decode_ood(const Tensor& features, const Tensor& phi, const MlpDecoder& decoder) {
  if (decoder.head != MlpDecoder::Head::OutOfDist) {
    throw std::invalid_argument("vdc: decode_ood needs an out-of-distribution decoder head");
  }
  size_t p_count = features.shape()[0];
  size_t feat_w = features.rank() == 2 ? features.shape()[1] : 0;
  size_t phi_w = phi.size();
  if (feat_w + phi_w != size_t(decoder.in_features)) {
    throw std::invalid_argument("vdc: decoder expects " + std::to_string(decoder.in_features) +
                                " inputs, got " + std::to_string(feat_w) + " features + " +
                                std::to_string(phi_w) + " latent dims");
  }
  Tensor parts[2] = {features, broadcast_rows(phi, p_count)};
  Tensor out = decoder.forward(concat_cols(std::span<const Tensor>(parts, 2)));
  OodSamples s;
  s.color = sigmoid(slice_cols(out, 0, 3));
  s.density = softplus(clamp(slice_cols(out, 3, 4), -30.0, 30.0));
  s.blend = sigmoid(slice_cols(out, 4, 5));
  return s;
}

}  // namespace vdc
