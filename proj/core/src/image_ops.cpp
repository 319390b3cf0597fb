// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/image_ops.hpp"

#include <algorithm>
#include <stdexcept>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

void check_image_arg(const char* op, const Tensor& input, int width, int height) {
  if (input.rank() != 2 || input.shape()[0] != size_t(width) * height) {
    fail(std::string(op) + ": input " + shape_str(input.shape()) + " does not cover " +
         std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

Tensor conv3x3(const Tensor& input, int width, int height, const Tensor& weight,
               const Tensor& bias) {
  check_image_arg("conv3x3", input, width, height);
  if (weight.rank() != 4 || weight.shape()[2] != 3 || weight.shape()[3] != 3 ||
      weight.shape()[1] != input.shape()[1]) {
    fail("conv3x3: weight " + shape_str(weight.shape()) + " does not match input channels");
  }
  size_t c_out = weight.shape()[0];
  size_t c_in = weight.shape()[1];
  if (bias.size() != c_out) fail("conv3x3: bias size mismatch");

  auto in_node = unwrap(input);
  auto w_node = unwrap(weight);
  auto b_node = unwrap(bias);
  const double* in = in_node->values.data();
  const double* w = w_node->values.data();
  const double* b = b_node->values.data();

  std::vector<double> out(size_t(width) * height * c_out);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double* dst = out.data() + (size_t(y) * width + x) * c_out;
      for (size_t co = 0; co < c_out; ++co) dst[co] = b[co];
      for (int dy = -1; dy <= 1; ++dy) {
        int sy = y + dy;
        if (sy < 0 || sy >= height) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          int sx = x + dx;
          if (sx < 0 || sx >= width) continue;
          const double* src = in + (size_t(sy) * width + sx) * c_in;
          size_t tap = size_t((dy + 1) * 3 + (dx + 1));
          for (size_t co = 0; co < c_out; ++co) {
            const double* wrow = w + (co * c_in) * 9 + tap;
            double acc = 0.0;
            for (size_t ci = 0; ci < c_in; ++ci) acc += wrow[ci * 9] * src[ci];
            dst[co] += acc;
          }
        }
      }
    }
  }

  return detail::make_node(
      "conv3x3", {size_t(width) * height, c_out}, std::move(out), {input, weight, bias},
      [in_node, w_node, b_node, width, height, c_in, c_out](detail::Node& self) {
        const double* g = self.grad.data();
        const double* in = in_node->values.data();
        const double* w = w_node->values.data();
        double* gin = in_node->requires_grad ? detail::grad_buffer(*in_node) : nullptr;
        double* gw = w_node->requires_grad ? detail::grad_buffer(*w_node) : nullptr;
        double* gb = b_node->requires_grad ? detail::grad_buffer(*b_node) : nullptr;
        for (int y = 0; y < height; ++y) {
          for (int x = 0; x < width; ++x) {
            const double* go = g + (size_t(y) * width + x) * c_out;
            if (gb) {
              for (size_t co = 0; co < c_out; ++co) gb[co] += go[co];
            }
            for (int dy = -1; dy <= 1; ++dy) {
              int sy = y + dy;
              if (sy < 0 || sy >= height) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                int sx = x + dx;
                if (sx < 0 || sx >= width) continue;
                size_t src_off = (size_t(sy) * width + sx) * c_in;
                size_t tap = size_t((dy + 1) * 3 + (dx + 1));
                for (size_t co = 0; co < c_out; ++co) {
                  double gc = go[co];
                  const double* wrow = w + (co * c_in) * 9 + tap;
                  if (gin) {
                    for (size_t ci = 0; ci < c_in; ++ci) gin[src_off + ci] += wrow[ci * 9] * gc;
                  }
                  if (gw) {
                    double* gwrow = gw + (co * c_in) * 9 + tap;
                    for (size_t ci = 0; ci < c_in; ++ci) gwrow[ci * 9] += in[src_off + ci] * gc;
                  }
                }
              }
            }
          }
        }
      });
}

Tensor avgpool2(const Tensor& input, int width, int height) {
  check_image_arg("avgpool2", input, width, height);
  if (width % 2 || height % 2) fail("avgpool2 needs even dimensions");
  size_t ch = input.shape()[1];
  int ow = width / 2, oh = height / 2;
  auto in_node = unwrap(input);
  const double* in = in_node->values.data();
  std::vector<double> out(size_t(ow) * oh * ch);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double* dst = out.data() + (size_t(y) * ow + x) * ch;
      const double* s00 = in + (size_t(2 * y) * width + 2 * x) * ch;
      const double* s01 = s00 + ch;
      const double* s10 = in + (size_t(2 * y + 1) * width + 2 * x) * ch;
      const double* s11 = s10 + ch;
      for (size_t c = 0; c < ch; ++c) dst[c] = 0.25 * (s00[c] + s01[c] + s10[c] + s11[c]);
    }
  }
  return detail::make_node("avgpool2", {size_t(ow) * oh, ch}, std::move(out), {input},
                           [in_node, width, ow, oh, ch](detail::Node& self) {
    if (!in_node->requires_grad) return;
    double* gin = detail::grad_buffer(*in_node);
    const double* g = self.grad.data();
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const double* go = g + (size_t(y) * ow + x) * ch;
        double* g00 = gin + (size_t(2 * y) * width + 2 * x) * ch;
        double* g01 = g00 + ch;
        double* g10 = gin + (size_t(2 * y + 1) * width + 2 * x) * ch;
        double* g11 = g10 + ch;
        for (size_t c = 0; c < ch; ++c) {
          double v = 0.25 * go[c];
          g00[c] += v;
          g01[c] += v;
          g10[c] += v;
          g11[c] += v;
        }
      }
    }
  });
}

namespace {

struct LerpTap {
  int i0, i1;
  double f;
};

std::vector<LerpTap> upsample_taps(int in_extent) {
  std::vector<LerpTap> taps(size_t(in_extent) * 2);
  for (int o = 0; o < in_extent * 2; ++o) {
    double s = (o + 0.5) / 2.0 - 0.5;
    double c = std::clamp(s, 0.0, double(in_extent - 1));
    int i0 = std::min(int(c), in_extent - 1);
    int i1 = std::min(i0 + 1, in_extent - 1);
    taps[o] = {i0, i1, c - i0};
  }
  return taps;
}

}  // namespace

Tensor upsample_bilinear2(const Tensor& input, int width, int height) {
  check_image_arg("upsample_bilinear2", input, width, height);
  size_t ch = input.shape()[1];
  int ow = width * 2, oh = height * 2;
  auto in_node = unwrap(input);
  const double* in = in_node->values.data();
  auto tx = upsample_taps(width);
  auto ty = upsample_taps(height);
  std::vector<double> out(size_t(ow) * oh * ch);
  for (int y = 0; y < oh; ++y) {
    const LerpTap& ry = ty[y];
    for (int x = 0; x < ow; ++x) {
      const LerpTap& rx = tx[x];
      double* dst = out.data() + (size_t(y) * ow + x) * ch;
      const double* s00 = in + (size_t(ry.i0) * width + rx.i0) * ch;
      const double* s01 = in + (size_t(ry.i0) * width + rx.i1) * ch;
      const double* s10 = in + (size_t(ry.i1) * width + rx.i0) * ch;
      const double* s11 = in + (size_t(ry.i1) * width + rx.i1) * ch;
      double w00 = (1 - ry.f) * (1 - rx.f), w01 = (1 - ry.f) * rx.f;
      double w10 = ry.f * (1 - rx.f), w11 = ry.f * rx.f;
      for (size_t c = 0; c < ch; ++c) {
        dst[c] = w00 * s00[c] + w01 * s01[c] + w10 * s10[c] + w11 * s11[c];
      }
    }
  }
  return detail::make_node(
      "upsample_bilinear2", {size_t(ow) * oh, ch}, std::move(out), {input},
      [in_node, width, ow, oh, ch, tx, ty](detail::Node& self) {
        if (!in_node->requires_grad) return;
        double* gin = detail::grad_buffer(*in_node);
        const double* g = self.grad.data();
        for (int y = 0; y < oh; ++y) {
          const LerpTap& ry = ty[size_t(y)];
          for (int x = 0; x < ow; ++x) {
            const LerpTap& rx = tx[size_t(x)];
            const double* go = g + (size_t(y) * ow + x) * ch;
            double w00 = (1 - ry.f) * (1 - rx.f), w01 = (1 - ry.f) * rx.f;
            double w10 = ry.f * (1 - rx.f), w11 = ry.f * rx.f;
            double* g00 = gin + (size_t(ry.i0) * width + rx.i0) * ch;
            double* g01 = gin + (size_t(ry.i0) * width + rx.i1) * ch;
            double* g10 = gin + (size_t(ry.i1) * width + rx.i0) * ch;
            double* g11 = gin + (size_t(ry.i1) * width + rx.i1) * ch;
            for (size_t c = 0; c < ch; ++c) {
              g00[c] += w00 * go[c];
              g01[c] += w01 * go[c];
              g10[c] += w10 * go[c];
              g11[c] += w11 * go[c];
            }
          }
        }
      });
}

}  // namespace vdc
