// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "vdc/tensor.hpp"

namespace vdc {

// Checkpoint container, magic "VDC1". After the magic, repeated entries of
//   u32  name length (little-endian), then that many UTF-8 bytes
//   u8   dtype code (1 = f32, 2 = f64)
//   u8   rank
//   u64  extent per dimension (little-endian)
//   raw  little-endian values, 4 or 8 bytes each per dtype
// until end of file. Entries are written in name order so identical contents
// produce identical bytes. Writes go through a temp file + rename.
void save_checkpoint(const std::filesystem::path& path,
                     const std::map<std::string, Tensor>& entries);

std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the file bytes; used to pin a checkpoint's identity.
uint64_t file_hash(const std::filesystem::path& path);

// FNV-1a over a tensor's raw value bytes (frozen-parameter contract checks).
uint64_t tensor_hash(const Tensor& t);

}  // namespace vdc
