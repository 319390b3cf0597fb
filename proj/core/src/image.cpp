// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

namespace vdc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

uint8_t quantize(double v) {
  double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return uint8_t(std::lround(255.0 * c));
}

void write_pnm(const std::filesystem::path& path, const Image& img, bool color) {
  if (color && img.channels != 3) fail("PPM output needs a 3-channel image");
  if (!color && img.channels != 1) fail("PGM output needs a 1-channel image");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path.string() + "' for writing");
  out << (color ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> row(size_t(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) row[size_t(x) * img.channels + c] = quantize(img.at(x, y, c));
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!out) fail("short write to '" + path.string() + "'");
}

int pnm_token(std::istream& in) {
  // Skips whitespace and '#' comments.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) fail("truncated PNM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

Image read_pnm(const std::filesystem::path& path, bool color) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path.string() + "'");
  char magic[2];
  in.read(magic, 2);
  const char* want = color ? "P6" : "P5";
  if (!in || magic[0] != want[0] || magic[1] != want[1]) {
    fail("'" + path.string() + "' is not a " + want + " file");
  }
  int w = pnm_token(in);
  int h = pnm_token(in);
  int maxval = pnm_token(in);
  if (maxval != 255) fail("unsupported PNM maxval in '" + path.string() + "'");
  int ch = color ? 3 : 1;
  std::vector<uint8_t> raw(size_t(w) * h * ch);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (size_t(in.gcount()) != raw.size()) fail("truncated pixel data in '" + path.string() + "'");
  Image img = Image::zeros(w, h, ch);
  for (size_t i = 0; i < raw.size(); ++i) img.px[i] = raw[i] / 255.0;
  return img;
}

void png_chunk(std::string& out, const char type[4], const std::string& data) {
  uint32_t len = uint32_t(data.size());
  uint8_t lenb[4] = {uint8_t(len >> 24), uint8_t(len >> 16), uint8_t(len >> 8), uint8_t(len)};
  out.append(reinterpret_cast<char*>(lenb), 4);
  std::string body(type, 4);
  body += data;
  out += body;
  uint32_t crc = uint32_t(::crc32(0, reinterpret_cast<const Bytef*>(body.data()), uInt(body.size())));
  uint8_t crcb[4] = {uint8_t(crc >> 24), uint8_t(crc >> 16), uint8_t(crc >> 8), uint8_t(crc)};
  out.append(reinterpret_cast<char*>(crcb), 4);
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Image& img) { write_pnm(path, img, true); }
void write_pgm(const std::filesystem::path& path, const Image& img) { write_pnm(path, img, false); }
Image read_ppm(const std::filesystem::path& path) { return read_pnm(path, true); }
Image read_pgm(const std::filesystem::path& path) { return read_pnm(path, false); }

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) fail("PNG output needs 1 or 3 channels");
  // Scanlines with filter byte 0.
  std::string raw;
  raw.reserve((size_t(img.width) * img.channels + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back('\0');
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) raw.push_back(char(quantize(img.at(x, y, c))));
    }
  }
  uLongf comp_len = compressBound(uLong(raw.size()));
  std::string compressed(comp_len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &comp_len,
                reinterpret_cast<const Bytef*>(raw.data()), uLong(raw.size()), 6) != Z_OK) {
    fail("zlib compression failed");
  }
  compressed.resize(comp_len);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  auto be32 = [&](std::string& s, uint32_t v) {
    uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    s.append(reinterpret_cast<char*>(b), 4);
  };
  be32(ihdr, uint32_t(img.width));
  be32(ihdr, uint32_t(img.height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(img.channels == 3 ? char(2) : char(0));  // color type
  ihdr.append(3, '\0');                                // compression, filter, interlace
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", compressed);
  png_chunk(out, "IEND", "");

  std::ofstream f(path, std::ios::binary);
  if (!f) fail("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) fail("short write to '" + path.string() + "'");
}

void write_image(const std::filesystem::path& path, const Image& img) {
  std::string ext = path.extension().string();
  if (ext == ".ppm") {
    write_ppm(path, img);
  } else if (ext == ".pgm") {
    write_pgm(path, img);
  } else if (ext == ".png") {
    write_png(path, img);
  } else {
    fail("unsupported image extension '" + ext + "' (use .ppm, .pgm or .png)");
  }
}

Image box_downsample2(const Image& img) {
  if (img.width % 2 || img.height % 2) fail("box_downsample2 needs even dimensions");
  Image out = Image::zeros(img.width / 2, img.height / 2, img.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = 0.25 * (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                                  img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c));
      }
    }
  }
  return out;
}

Image bilinear_upsample(const Image& img, int factor) {
  if (factor < 1) fail("bilinear_upsample factor must be >= 1");
  if (factor == 1) return img;
  Image out = Image::zeros(img.width * factor, img.height * factor, img.channels);
  for (int y = 0; y < out.height; ++y) {
    // Half-pixel mapping with clamped edges.
    double sy = (y + 0.5) / factor - 0.5;
    double cy = std::clamp(sy, 0.0, double(img.height - 1));
    int y0 = std::min(int(cy), img.height - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double fy = cy - y0;
    for (int x = 0; x < out.width; ++x) {
      double sx = (x + 0.5) / factor - 0.5;
      double cx = std::clamp(sx, 0.0, double(img.width - 1));
      int x0 = std::min(int(cx), img.width - 1);
      int x1 = std::min(x0 + 1, img.width - 1);
      double fx = cx - x0;
      for (int c = 0; c < img.channels; ++c) {
        double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
        double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
        out.at(x, y, c) =
            (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
      }
    }
  }
  return out;
}

Tensor image_to_tensor(const Image& img, Dtype dtype) {
  return Tensor::constant({img.pixel_count(), size_t(img.channels)}, img.px, dtype);
}

Image tensor_to_image(const Tensor& t, int width, int height) {
  if (t.rank() != 2 || t.shape()[0] != size_t(width) * height) {
    fail("tensor_to_image: shape " + shape_str(t.shape()) + " does not cover " +
         std::to_string(width) + "x" + std::to_string(height));
  }
  Image img;
  img.width = width;
  img.height = height;
  img.channels = int(t.shape()[1]);
  img.px.assign(t.values().begin(), t.values().end());
  return img;
}

}  // namespace vdc
