// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "vdc/tensor.hpp"

namespace vdc {

// Row-major H x W x C image with values nominally in [0, 1].
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> px;

  static Image zeros(int width, int height, int channels) {
    return {width, height, channels,
            std::vector<double>(size_t(width) * height * channels, 0.0)};
  }

  double at(int x, int y, int c) const {
    return px[(size_t(y) * width + x) * channels + c];
  }
  double& at(int x, int y, int c) { return px[(size_t(y) * width + x) * channels + c]; }
  size_t pixel_count() const { return size_t(width) * height; }
};

// Binary PPM (P6) / PGM (P5), maxval 255, quantization round(255*clamp(v,0,1)).
void write_ppm(const std::filesystem::path& path, const Image& img);
void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);  // P6 -> 3 channels
Image read_pgm(const std::filesystem::path& path);  // P5 -> 1 channel

// 8-bit PNG (RGB or grayscale), zlib-compressed.
void write_png(const std::filesystem::path& path, const Image& img);

// Writes PPM/PGM/PNG by extension.
void write_image(const std::filesystem::path& path, const Image& img);

Image box_downsample2(const Image& img);            // H,W must be even
Image bilinear_upsample(const Image& img, int factor);

// (H*W, C) constant tensor <-> image.
Tensor image_to_tensor(const Image& img, Dtype dtype);
inline Tensor image_to_tensor(const Image& img) { return image_to_tensor(img, default_dtype()); }
Image tensor_to_image(const Tensor& t, int width, int height);

}  // namespace vdc
