// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eulab/field.hpp"

namespace eulab::io {

/// Hex SHA-256 of a byte range / of a file.
std::string sha256(const void* data, std::size_t size);
std::string sha256_file(const std::filesystem::path& path);

/// Header stored next to a dump as `<stem>.json`.
struct DumpHeader {
  std::vector<int> shape;   // (t, x, y, z, component); t absent for single fields
  GridSpec grid{};
  std::string field_kind;   // "scalar", "vector", "tensor"
  std::string checksum;     // SHA-256 of the .bin payload
};

/// Field dumps: `<stem>.bin` holds little-endian float64 in C order
/// (t, x, y, z, component); tensors use the (xx, yy, zz, xy, xz, yz) order.
/// Returns the header that was written.
template <typename Field>
DumpHeader write_dump(const std::filesystem::path& stem, const TimeSeries<Field>& series);
template <int C>
DumpHeader write_dump(const std::filesystem::path& stem, const PeriodicField<C>& field);

DumpHeader read_header(const std::filesystem::path& stem);

/// Reads and verifies a dump (Io on missing files, shape or kind mismatch, bad checksum).
template <typename Field>
TimeSeries<Field> read_series(const std::filesystem::path& stem);
template <int C>
PeriodicField<C> read_field(const std::filesystem::path& stem);

/// Recompute the payload checksum and compare with the header.
bool verify_dump(const std::filesystem::path& stem);

inline constexpr const char* version = "0.1.0";

/// (component, version) for this library and the libraries it was built with.
std::vector<std::pair<std::string, std::string>> library_versions();

}  // namespace eulab::io
