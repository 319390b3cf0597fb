// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "vdc/image_ops.hpp"

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

}  // namespace

MaskImage MaskImage::from_image(const Image& img) {
  if (img.channels != 1) fail("mask images must have one channel");
  MaskImage m;
  m.width = img.width;
  m.height = img.height;
  m.ood.resize(img.px.size());
  for (size_t i = 0; i < img.px.size(); ++i) m.ood[i] = img.px[i] >= 0.5 ? 1.0 : 0.0;
  return m;
}

size_t MaskImage::ood_count() const {
  size_t n = 0;
  for (double v : ood) n += v != 0.0;
  return n;
}

Tensor MaskImage::ood_tensor() const {
  return Tensor::constant({ood.size(), 1}, ood);
}

Tensor MaskImage::indist_tensor() const {
  std::vector<double> inv(ood.size());
  for (size_t i = 0; i < ood.size(); ++i) inv[i] = 1.0 - ood[i];
  return Tensor::constant({ood.size(), 1}, std::move(inv));
}

std::vector<uint32_t> MaskImage::ood_rows() const {
  std::vector<uint32_t> rows;
  for (size_t i = 0; i < ood.size(); ++i) {
    if (ood[i] != 0.0) rows.push_back(uint32_t(i));
  }
  return rows;
}

std::vector<uint8_t> MaskImage::dilated(int radius) const {
  std::vector<uint8_t> out(ood.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (ood[size_t(y) * width + x] == 0.0) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        int sy = y + dy;
        if (sy < 0 || sy >= height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          int sx = x + dx;
          if (sx < 0 || sx >= width) continue;
          out[size_t(sy) * width + sx] = 1;
        }
      }
    }
  }
  return out;
}

Tensor masked_l2(const Tensor& x, const Tensor& xhat, const Tensor& m) {
  if (x.shape() != xhat.shape()) {
    throw std::invalid_argument("vdc: masked_l2 image shapes differ: " + shape_str(x.shape()) +
                                " vs " + shape_str(xhat.shape()));
  }
  double m_total = 0.0;
  for (double v : m.values()) m_total += v;
  if (m_total <= 0.0) fail("masked_l2: mask selects no pixels (||m||_1 = 0)");
  size_t channels = x.rank() == 2 ? x.shape()[1] : 1;
  Tensor diff = sub(x, xhat);
  Tensor per_pixel = sum_axis(mul(diff, diff), 1);  // (N,1), summed over channels
  Tensor weighted = sum(mul(per_pixel, m));
  return weighted * (1.0 / (m_total * double(channels)));
}

PerceptualProxy::PerceptualProxy(uint64_t seed, int filters) : filters_(filters) {
  Rng rng(seed);
  double scale = 1.0 / std::sqrt(27.0);
  auto bank = [&] {
    return Tensor::constant({size_t(filters_), 3, 3, 3},
                            rng.normal_vec(size_t(filters_) * 27, 0.0, scale));
  };
  weight0_ = bank();
  bias0_ = Tensor::zeros({size_t(filters_)});
  weight1_ = bank();
  bias1_ = Tensor::zeros({size_t(filters_)});
}

namespace {

// Unit-normalize feature channels per pixel.
Tensor channel_normalize(const Tensor& f) {
  Tensor norm = sqrt(sum_axis(mul(f, f), 1) + 1e-10);
  return div(f, norm);
}

// Weighted mean of per-pixel squared feature distance; zero when the weights
// select nothing.
Tensor scale_distance(const Tensor& fx, const Tensor& fxh, const Tensor* weights) {
  Tensor d = sub(channel_normalize(fx), channel_normalize(fxh));
  Tensor per_pixel = sum_axis(mul(d, d), 1);  // (N,1)
  if (!weights) return mean(per_pixel);
  double total = 0.0;
  for (double v : weights->values()) total += v;
  if (total <= 0.0) return Tensor::scalar(0.0, per_pixel.dtype());
  return sum(mul(per_pixel, *weights)) * (1.0 / total);
}

}  // namespace

Tensor PerceptualProxy::loss(const Tensor& x, const Tensor& xhat, int width, int height,
                             const std::optional<Tensor>& mask) const {
  if (x.shape() != xhat.shape()) {
    throw std::invalid_argument("vdc: perceptual loss image shapes differ");
  }
  if (width % 2 || height % 2) fail("perceptual loss needs even image dimensions");

  Tensor f0x = conv3x3(x, width, height, weight0_, bias0_);
  Tensor f0h = conv3x3(xhat, width, height, weight0_, bias0_);
  Tensor d0 = scale_distance(f0x, f0h, mask ? &*mask : nullptr);

  Tensor x1 = avgpool2(x, width, height);
  Tensor xh1 = avgpool2(xhat, width, height);
  Tensor f1x = conv3x3(x1, width / 2, height / 2, weight1_, bias1_);
  Tensor f1h = conv3x3(xh1, width / 2, height / 2, weight1_, bias1_);
  std::optional<Tensor> mask1;
  if (mask) mask1 = avgpool2(*mask, width, height);
  Tensor d1 = scale_distance(f1x, f1h, mask1 ? &*mask1 : nullptr);

  return mul(add(d0, d1), Tensor::scalar(0.5, d0.dtype()));
}

Tensor latent_delta_reg(const Tensor& w) {
  if (w.rank() != 2 || w.shape()[0] < 1) {
    throw std::invalid_argument("vdc: latent_delta_reg expects an (L,D) latent, got " +
                                shape_str(w.shape()));
  }
  size_t rows = w.shape()[0];
  if (rows == 1) return Tensor::scalar(0.0, w.dtype());
  Tensor base = slice_cols(reshape(w, {1, w.size()}), 0, w.shape()[1]);  // first row as (1,D)
  Tensor rest = gather_rows(w, [&] {
    std::vector<uint32_t> idx(rows - 1);
    for (size_t i = 1; i < rows; ++i) idx[i - 1] = uint32_t(i);
    return idx;
  }());
  Tensor delta = sub(rest, base);  // row-broadcast subtract
  return sum(mul(delta, delta));
}

Tensor blend_sparsity(const Tensor& b, const std::optional<Tensor>& indist) {
  Tensor l1 = abs(b);
  if (!indist) return sum(l1);
  return sum(mul(l1, *indist));  // column broadcast: (N,K) * (N,1)
}

Tensor blend_entropy(const Tensor& b) { return sum(binary_entropy(b)); }

Tensor sr_loss(const Tensor& x, const Tensor& xhat, int width, int height,
               const PerceptualProxy& proxy) {
  Tensor ones = Tensor::full({x.shape()[0], 1}, 1.0, x.dtype());
  return add(masked_l2(x, xhat, ones), proxy.loss(x, xhat, width, height));
}

}  // namespace vdc
