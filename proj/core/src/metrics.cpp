// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::array<double, kWin> gaussian_kernel() {
  std::array<double, kWin> k{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    double d = i - (kWin - 1) / 2.0;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter, valid region only: output is (W-10) x (H-10).
std::vector<double> gauss_filter(const std::vector<double>& img, int w, int h) {
  static const std::array<double, kWin> kernel = gaussian_kernel();
  int ow = w - kWin + 1, oh = h - kWin + 1;
  std::vector<double> horiz(size_t(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWin; ++i) s += kernel[i] * img[size_t(y) * w + x + i];
      horiz[size_t(y) * ow + x] = s;
    }
  }
  std::vector<double> out(size_t(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWin; ++i) s += kernel[i] * horiz[size_t(y + i) * ow + x];
      out[size_t(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double image_mse(const Image& x, const Image& xhat, const std::vector<double>* region) {
  if (x.width != xhat.width || x.height != xhat.height || x.channels != xhat.channels) {
    throw std::invalid_argument("vdc: metric image shapes differ");
  }
  double acc = 0.0;
  size_t count = 0;
  for (size_t p = 0; p < x.pixel_count(); ++p) {
    if (region && (*region)[p] == 0.0) continue;
    for (int c = 0; c < x.channels; ++c) {
      double d = x.px[p * x.channels + c] - xhat.px[p * x.channels + c];
      acc += d * d;
    }
    ++count;
  }
  if (count == 0) return 0.0;
  return acc / (double(count) * x.channels);
}

double psnr_from_mse(double mse) {
  if (mse < 1e-10) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double compute_ssim(const Image& x, const Image& xhat) {
  if (x.width != xhat.width || x.height != xhat.height || x.channels != xhat.channels) {
    throw std::invalid_argument("vdc: metric image shapes differ");
  }
  if (x.width < kWin || x.height < kWin) fail("SSIM needs images of at least 11x11");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  std::vector<double> a(x.pixel_count()), b(x.pixel_count()), aa(x.pixel_count()),
      bb(x.pixel_count()), ab(x.pixel_count());
  for (int c = 0; c < x.channels; ++c) {
    for (size_t p = 0; p < x.pixel_count(); ++p) {
      a[p] = x.px[p * x.channels + c];
      b[p] = xhat.px[p * x.channels + c];
      aa[p] = a[p] * a[p];
      bb[p] = b[p] * b[p];
      ab[p] = a[p] * b[p];
    }
    auto mu_a = gauss_filter(a, x.width, x.height);
    auto mu_b = gauss_filter(b, x.width, x.height);
    auto m_aa = gauss_filter(aa, x.width, x.height);
    auto m_bb = gauss_filter(bb, x.width, x.height);
    auto m_ab = gauss_filter(ab, x.width, x.height);
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      double va = m_aa[i] - mu_a[i] * mu_a[i];
      double vb = m_bb[i] - mu_b[i] * mu_b[i];
      double cov = m_ab[i] - mu_a[i] * mu_b[i];
      double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
      double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
      acc += num / den;
    }
    total += acc / double(mu_a.size());
  }
  return total / x.channels;
}

MetricsRow compute_psnr_ssim(const Image& x, const Image& xhat, const MaskImage* mask) {
  MetricsRow row;
  row.l2 = image_mse(x, xhat, nullptr);
  row.psnr = psnr_from_mse(row.l2);
  row.ssim = compute_ssim(x, xhat);
  if (mask) {
    std::vector<double> inside = mask->ood;
    std::vector<double> outside(inside.size());
    for (size_t i = 0; i < inside.size(); ++i) outside[i] = 1.0 - inside[i];
    row.psnr_masked = psnr_from_mse(image_mse(x, xhat, &inside));
    row.psnr_unmasked = psnr_from_mse(image_mse(x, xhat, &outside));
  } else {
    row.psnr_masked = row.psnr;
    row.psnr_unmasked = row.psnr;
  }
  return row;
}

}  // namespace vdc
