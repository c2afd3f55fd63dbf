// SPDX-License-Identifier: Apache-2.0
#include "eulab/io.hpp"

#include <fftw3.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace eulab::io {

static_assert(std::endian::native == std::endian::little, "dumps assume a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex(const unsigned char* d, unsigned n) {
  std::ostringstream os;
  for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(d[i]);
  return os.str();
}

const char* kind_of(int c) {
  switch (c) {
    case 1: return "scalar";
    case 3: return "vector";
    case 6: return "tensor";
  }
  throw Error(ErrorCode::InvalidArgument, "unsupported component count");
}

fs::path bin_path(const fs::path& stem) { return fs::path(stem.string() + ".bin"); }
fs::path json_path(const fs::path& stem) { return fs::path(stem.string() + ".json"); }

template <int C>
void append(std::vector<double>& out, const PeriodicField<C>& f) {
  const auto& d = f.data();
  for (Eigen::Index p = 0; p < d.rows(); ++p)
    for (int c = 0; c < C; ++c) out.push_back(d(p, c));
}

template <int C>
PeriodicField<C> slice_from(const std::vector<double>& buf, std::size_t offset, const GridSpec& g) {
  typename PeriodicField<C>::Data d(g.points(), C);
  for (Eigen::Index p = 0; p < d.rows(); ++p)
    for (int c = 0; c < C; ++c) d(p, c) = buf[offset + static_cast<std::size_t>(p) * C + c];
  return PeriodicField<C>(g, std::move(d));
}

DumpHeader write_payload(const fs::path& stem, const std::vector<double>& buf, std::vector<int> shape,
                         const GridSpec& grid, int components) {
  if (!stem.parent_path().empty()) fs::create_directories(stem.parent_path());
  {
    std::ofstream out(bin_path(stem), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + bin_path(stem).string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!out) throw Error(ErrorCode::Io, "short write to " + bin_path(stem).string());
  }
  DumpHeader h{std::move(shape), grid, kind_of(components), sha256(buf.data(), buf.size() * sizeof(double))};
  const json j = {{"shape", h.shape},
                  {"grid", {{"n", grid.n}, {"t_end", grid.t_end}, {"n_t", grid.n_t}, {"period", grid.period}}},
                  {"field_kind", h.field_kind},
                  {"checksum", h.checksum},
                  {"dtype", "float64-le"},
                  {"order", "t,x,y,z,component"}};
  std::ofstream out(json_path(stem), std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + json_path(stem).string());
  out << j.dump(2) << '\n';
  return h;
}

std::vector<double> read_payload(const fs::path& stem, const DumpHeader& h) {
  std::size_t count = 1;
  for (int s : h.shape) count *= static_cast<std::size_t>(s);
  std::ifstream in(bin_path(stem), std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + bin_path(stem).string());
  std::vector<double> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)) || in.peek() != EOF)
    throw Error(ErrorCode::Io, "payload size does not match the header shape");
  if (sha256(buf.data(), count * sizeof(double)) != h.checksum)
    throw Error(ErrorCode::Io, "checksum mismatch for " + bin_path(stem).string());
  return buf;
}

void expect(const DumpHeader& h, bool series, int components) {
  const std::size_t rank = series ? 5 : 4;
  if (h.shape.size() != rank || h.field_kind != kind_of(components) || h.shape.back() != components)
    throw Error(ErrorCode::Io, "dump holds a different kind of field");
  const int off = series ? 1 : 0;
  for (int a = 0; a < 3; ++a)
    if (h.shape[off + a] != h.grid.n) throw Error(ErrorCode::Io, "dump shape does not match its grid");
  if (series && h.shape[0] != h.grid.n_t + 1) throw Error(ErrorCode::Io, "slice count does not match n_t");
}

}  // namespace

std::string sha256(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) throw Error(ErrorCode::Io, "SHA-256 failed");
  return hex(md, len);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> chunk(1 << 16);
  while (in) {
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    EVP_DigestUpdate(ctx, chunk.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return hex(md, len);
}

template <typename Field>
DumpHeader write_dump(const fs::path& stem, const TimeSeries<Field>& series) {
  constexpr int C = Field::components;
  const GridSpec& g = series.grid();
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(series.n_slices()) * g.points() * C);
  for (const Field& f : series.slices()) append(buf, f);
  return write_payload(stem, buf, {series.n_slices(), g.n, g.n, g.n, C}, g, C);
}

template <int C>
DumpHeader write_dump(const fs::path& stem, const PeriodicField<C>& field) {
  const GridSpec& g = field.grid();
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(g.points()) * C);
  append(buf, field);
  return write_payload(stem, buf, {g.n, g.n, g.n, C}, g, C);
}

DumpHeader read_header(const fs::path& stem) {
  std::ifstream in(json_path(stem));
  if (!in) throw Error(ErrorCode::Io, "cannot read " + json_path(stem).string());
  try {
    const json j = json::parse(in);
    DumpHeader h;
    h.shape = j.at("shape").get<std::vector<int>>();
    const json& g = j.at("grid");
    h.grid.n = g.at("n").get<int>();
    h.grid.t_end = g.at("t_end").get<double>();
    h.grid.n_t = g.at("n_t").get<int>();
    h.grid.period = g.at("period").get<double>();
    h.field_kind = j.at("field_kind").get<std::string>();
    h.checksum = j.at("checksum").get<std::string>();
    return h;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, "malformed dump header " + json_path(stem).string() + ": " + e.what());
  }
}

template <typename Field>
TimeSeries<Field> read_series(const fs::path& stem) {
  constexpr int C = Field::components;
  const DumpHeader h = read_header(stem);
  expect(h, true, C);
  const std::vector<double> buf = read_payload(stem, h);
  std::vector<Field> slices;
  const std::size_t per = static_cast<std::size_t>(h.grid.points()) * C;
  for (int j = 0; j < h.shape[0]; ++j) slices.push_back(slice_from<C>(buf, j * per, h.grid));
  return TimeSeries<Field>(h.grid, std::move(slices));
}

template <int C>
PeriodicField<C> read_field(const fs::path& stem) {
  const DumpHeader h = read_header(stem);
  expect(h, false, C);
  return slice_from<C>(read_payload(stem, h), 0, h.grid);
}

bool verify_dump(const fs::path& stem) {
  const DumpHeader h = read_header(stem);
  if (!fs::exists(bin_path(stem))) return false;
  return sha256_file(bin_path(stem)) == h.checksum;
}

std::vector<std::pair<std::string, std::string>> library_versions() {
  return {{"eulab", version},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"fftw", fftw_version},
          {"openssl", OpenSSL_version(OPENSSL_VERSION)},
          {"compiler", __VERSION__}};
}

template DumpHeader write_dump(const fs::path&, const ScalarSeries&);
template DumpHeader write_dump(const fs::path&, const VectorSeries&);
template DumpHeader write_dump(const fs::path&, const TensorSeries&);
template DumpHeader write_dump(const fs::path&, const ScalarField&);
template DumpHeader write_dump(const fs::path&, const VectorField&);
template DumpHeader write_dump(const fs::path&, const SymTensorField&);
template ScalarSeries read_series(const fs::path&);
template VectorSeries read_series(const fs::path&);
template TensorSeries read_series(const fs::path&);
template ScalarField read_field(const fs::path&);
template VectorField read_field(const fs::path&);
template SymTensorField read_field(const fs::path&);

}  // namespace eulab::io
