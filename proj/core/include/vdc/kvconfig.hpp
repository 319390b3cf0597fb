// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace vdc {

// Line-based "key = value" files (configs, run manifests). '#' starts a
// comment; keys are written in sorted order so identical content produces
// identical bytes.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse_file(const std::filesystem::path& path);
  static KvConfig parse_string(const std::string& text);
  void write_file(const std::filesystem::path& path) const;
  std::string to_string() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  int64_t get(const std::string& key, int64_t fallback) const;
  bool get(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, const char* value) { values_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, int64_t value);
  void set(const std::string& key, uint64_t value);
  void set(const std::string& key, int value) { set(key, int64_t(value)); }
  void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vdc
