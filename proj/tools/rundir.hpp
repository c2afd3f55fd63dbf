// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

namespace eulab::cli {

/// One CSV file with a fixed header. Numbers are written in shortest
/// round-trip form, so reruns are byte-identical and values reload exactly.
class Csv {
 public:
  Csv(const std::filesystem::path& path, std::vector<std::string> header);
  Csv& operator<<(double v);
  Csv& operator<<(const std::string& v);
  Csv& operator<<(int v) { return *this << static_cast<double>(v); }
  /// Empty cell (quantity undefined for this row).
  Csv& blank();
  void end_row();
  /// Flush and close; required before the file is checksummed.
  void close() { out_.close(); }

 private:
  void separator();
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t cell_ = 0;
};

std::string format_number(double v);

/// Output directory with manifest.json = {config, versions, checksums, timings, ...}.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& relative) const { return root_ / relative; }

  /// Record the checksum of a file already written under the root.
  void track(const std::string& relative);
  /// Track both halves of a field dump.
  void track_dump(const std::string& stem);

  void set_config(nlohmann::ordered_json config) { manifest_["config"] = std::move(config); }
  nlohmann::ordered_json& results() { return manifest_["results"]; }

  /// Seconds since construction or the previous mark, stored under `phase`.
  void mark(const std::string& phase);
  void write_manifest(const std::string& verdict);

 private:
  std::filesystem::path root_;
  nlohmann::ordered_json manifest_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace eulab::cli
