// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eulab/field.hpp"

namespace eulab::cli {

/// Bad command line, config file or input path: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Key {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Flat `key = value` configuration. Lines starting with '#' and blank lines
/// are ignored; keys outside the schema are rejected.
class Config {
 public:
  explicit Config(std::vector<Key> schema);

  void load_file(const std::filesystem::path& path);
  void set(const std::string& name, const std::string& value);

  const std::string& str(const std::string& name) const;
  double num(const std::string& name) const;
  int integer(const std::string& name) const;
  std::uint64_t u64(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::vector<int> int_list(const std::string& name) const;
  Vec3i vec3i(const std::string& name) const;

  /// Every key with its resolved value, in schema order.
  nlohmann::ordered_json resolved() const;
  std::string describe() const;

 private:
  const Key& key(const std::string& name) const;
  std::vector<Key> schema_;
  std::map<std::string, std::string> values_;
};

}  // namespace eulab::cli
