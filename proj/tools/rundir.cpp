// SPDX-License-Identifier: Apache-2.0
#include "rundir.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "config.hpp"
#include "eulab/io.hpp"

namespace eulab::cli {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

Csv::Csv(const fs::path& path, std::vector<std::string> header) : out_(path, std::ios::trunc), columns_(header.size()) {
  if (!out_) throw UsageError("cannot write " + path.string());
  for (const std::string& h : header) *this << h;
  end_row();
}

void Csv::separator() {
  if (cell_++ > 0) out_ << ',';
}

Csv& Csv::operator<<(double v) {
  separator();
  out_ << format_number(v);
  return *this;
}

Csv& Csv::operator<<(const std::string& v) {
  separator();
  out_ << v;
  return *this;
}

Csv& Csv::blank() {
  separator();
  return *this;
}

void Csv::end_row() {
  if (cell_ != columns_) throw std::logic_error("CSV row has the wrong number of cells");
  out_ << '\n';
  cell_ = 0;
}

RunDir::RunDir(fs::path root) : root_(std::move(root)), last_(std::chrono::steady_clock::now()) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw UsageError("cannot create run directory " + root_.string() + ": " + ec.message());
  manifest_["config"] = nlohmann::ordered_json::object();
  nlohmann::ordered_json versions = nlohmann::ordered_json::object();
  for (const auto& [name, v] : io::library_versions()) versions[name] = v;
  manifest_["versions"] = versions;
  manifest_["checksums"] = nlohmann::ordered_json::object();
  manifest_["timings"] = nlohmann::ordered_json::object();
  manifest_["results"] = nlohmann::ordered_json::object();
}

void RunDir::track(const std::string& relative) { manifest_["checksums"][relative] = io::sha256_file(path(relative)); }

void RunDir::track_dump(const std::string& stem) {
  track(stem + ".bin");
  track(stem + ".json");
}

void RunDir::mark(const std::string& phase) {
  const auto now = std::chrono::steady_clock::now();
  manifest_["timings"][phase] = std::chrono::duration<double>(now - last_).count();
  last_ = now;
}

void RunDir::write_manifest(const std::string& verdict) {
  manifest_["verdict"] = verdict;
  std::ofstream out(path("manifest.json"), std::ios::trunc);
  if (!out) throw UsageError("cannot write manifest in " + root_.string());
  out << manifest_.dump(2) << '\n';
}

}  // namespace eulab::cli
