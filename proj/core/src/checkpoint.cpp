// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <unistd.h>

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace vdc {

namespace {

constexpr char kMagic[4] = {'V', 'D', 'C', '1'};

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

void put_bytes(std::string& buf, const void* p, size_t n) {
  buf.append(reinterpret_cast<const char*>(p), n);
}

template <class T>
void put_pod(std::string& buf, T v) {
  put_bytes(buf, &v, sizeof(T));
}

uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::map<std::string, Tensor>& entries) {
  std::string buf;
  put_bytes(buf, kMagic, 4);
  for (const auto& [name, tensor] : entries) {
    if (!tensor.defined()) fail("save_checkpoint: undefined tensor for entry '" + name + "'");
    put_pod<uint32_t>(buf, uint32_t(name.size()));
    put_bytes(buf, name.data(), name.size());
    put_pod<uint8_t>(buf, uint8_t(tensor.dtype()));
    const Shape& shape = tensor.shape();
    put_pod<uint8_t>(buf, uint8_t(shape.size()));
    for (size_t d : shape) put_pod<uint64_t>(buf, uint64_t(d));
    auto vals = tensor.values();
    if (tensor.dtype() == Dtype::F32) {
      for (double v : vals) put_pod<float>(buf, float(v));
    } else {
      for (double v : vals) put_pod<double>(buf, v);
    }
  }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) fail("cannot open '" + tmp.string() + "' for writing");
    size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
    int rc = (written == buf.size()) ? 0 : -1;
    if (rc == 0) rc = std::fflush(f);
    if (rc == 0) rc = fsync(fileno(f));
    std::fclose(f);
    if (rc != 0) {
      std::filesystem::remove(tmp);
      fail("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open checkpoint '" + path.string() + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    fail("'" + path.string() + "' is not a VDC1 checkpoint");
  }
  std::map<std::string, Tensor> out;
  size_t pos = 4;
  auto need = [&](size_t n) {
    if (pos + n > buf.size()) fail("truncated checkpoint '" + path.string() + "'");
  };
  while (pos < buf.size()) {
    need(4);
    uint32_t name_len;
    std::memcpy(&name_len, buf.data() + pos, 4);
    pos += 4;
    need(name_len);
    std::string name(buf.data() + pos, name_len);
    pos += name_len;
    need(2);
    uint8_t dtype_code = uint8_t(buf[pos++]);
    uint8_t rank = uint8_t(buf[pos++]);
    if (dtype_code != 1 && dtype_code != 2) {
      fail("unknown dtype code in checkpoint entry '" + name + "'");
    }
    Shape shape(rank);
    need(size_t(rank) * 8);
    for (int d = 0; d < rank; ++d) {
      uint64_t e;
      std::memcpy(&e, buf.data() + pos, 8);
      pos += 8;
      shape[d] = size_t(e);
    }
    size_t n = shape_size(shape);
    std::vector<double> values(n);
    if (dtype_code == 1) {
      need(n * 4);
      for (size_t i = 0; i < n; ++i) {
        float v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        values[i] = double(v);
      }
    } else {
      need(n * 8);
      std::memcpy(values.data(), buf.data() + pos, n * 8);
      pos += n * 8;
    }
    out.emplace(std::move(name),
                Tensor::constant(std::move(shape), std::move(values),
                                 dtype_code == 1 ? Dtype::F32 : Dtype::F64));
  }
  return out;
}

uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path.string() + "' for hashing");
  uint64_t h = 0xcbf29ce484222325ULL;
  char chunk[65536];
  while (in) {
    in.read(chunk, sizeof(chunk));
    h = fnv1a(chunk, size_t(in.gcount()), h);
  }
  return h;
}

uint64_t tensor_hash(const Tensor& t) {
  auto vals = t.values();
  return fnv1a(vals.data(), vals.size() * sizeof(double));
}

}  // namespace vdc
