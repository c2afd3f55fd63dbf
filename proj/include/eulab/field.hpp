// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "eulab/error.hpp"

namespace eulab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec3c = Eigen::Vector3cd;
using Vec3i = Eigen::Vector3i;

/// Uniform space-time grid on the periodic box [0, period)^3 x [0, t_end].
///
/// The default period is 2*pi, so a mode with integer wavevector k is
/// exp(i k.x). With period 1 the same integer k labels exp(2 pi i k.x); all
/// spectral operators scale derivatives by 2*pi/period.
struct GridSpec {
  int n = 32;
  double t_end = 1.0;
  int n_t = 64;
  double period = 2.0 * std::numbers::pi;

  int points() const { return n * n * n; }
  double dx() const { return period / n; }
  double dt() const { return t_end / n_t; }
  double volume() const { return period * period * period; }
  double cell_volume() const { return volume() / points(); }
  double time(int j) const { return j * dt(); }
  double wavenumber_scale() const { return 2.0 * std::numbers::pi / period; }
  /// Largest resolved integer frequency per axis (Nyquist modes are dropped).
  int max_mode() const { return n / 2 - 1; }

  Vec3 position(int i, int j, int k) const { return Vec3(i * dx(), j * dx(), k * dx()); }
  Vec3 position(std::ptrdiff_t flat) const {
    const int k = static_cast<int>(flat % n);
    const int j = static_cast<int>((flat / n) % n);
    const int i = static_cast<int>(flat / (static_cast<std::ptrdiff_t>(n) * n));
    return position(i, j, k);
  }
  std::ptrdiff_t index(int i, int j, int k) const {
    return (static_cast<std::ptrdiff_t>(i) * n + j) * n + k;
  }

  void validate() const {
    if (n < 8 || (n & (n - 1)) != 0)
      throw Error(ErrorCode::InvalidArgument, "grid n must be a power of two >= 8");
    if (n_t < 8) throw Error(ErrorCode::InvalidArgument, "n_t must be >= 8");
    if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
    if (!(period > 0.0)) throw Error(ErrorCode::InvalidArgument, "period must be positive");
  }

  /// Same spatial grid (time parameters may differ between slices of one field).
  bool same_space(const GridSpec& o) const { return n == o.n && period == o.period; }
  bool operator==(const GridSpec& o) const {
    return n == o.n && t_end == o.t_end && n_t == o.n_t && period == o.period;
  }
};

inline void require_same_space(const GridSpec& a, const GridSpec& b) {
  if (!a.same_space(b)) throw Error(ErrorCode::GridMismatch, "fields live on different grids");
}

/// Real samples of a C-component field on the n^3 grid; component c is column c.
///
/// C = 1 scalar, 3 vector, 6 symmetric tensor stored as (xx, yy, zz, xy, xz, yz).
template <int C>
class PeriodicField {
 public:
  using Data = Eigen::Array<double, Eigen::Dynamic, C>;
  static constexpr int components = C;

  PeriodicField() = default;
  explicit PeriodicField(const GridSpec& grid) : grid_(grid), data_(Data::Zero(grid.points(), C)) {}
  PeriodicField(const GridSpec& grid, Data data) : grid_(grid), data_(std::move(data)) {
    if (data_.rows() != grid.points())
      throw Error(ErrorCode::GridMismatch, "sample count does not match grid");
  }

  template <typename F>
  static PeriodicField from_function(const GridSpec& grid, F&& f) {
    PeriodicField out(grid);
    for (std::ptrdiff_t p = 0; p < grid.points(); ++p) {
      if constexpr (C == 1) {
        out.data_(p, 0) = f(grid.position(p));
      } else {
        out.data_.row(p) = f(grid.position(p)).transpose();
      }
    }
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  const Data& data() const { return data_; }
  Data& data() { return data_; }
  auto component(int c) const { return data_.col(c); }
  auto component(int c) { return data_.col(c); }
  std::ptrdiff_t size() const { return data_.rows(); }

  PeriodicField& operator+=(const PeriodicField& o) {
    require_same_space(grid_, o.grid_);
    data_ += o.data_;
    return *this;
  }
  PeriodicField& operator-=(const PeriodicField& o) {
    require_same_space(grid_, o.grid_);
    data_ -= o.data_;
    return *this;
  }
  PeriodicField& operator*=(double s) {
    data_ *= s;
    return *this;
  }
  friend PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
  friend PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
  friend PeriodicField operator*(double s, PeriodicField a) { return a *= s; }
  friend PeriodicField operator*(PeriodicField a, double s) { return a *= s; }
  PeriodicField operator-() const { return PeriodicField(grid_, -data_); }

  /// Per-component spatial average.
  Eigen::Matrix<double, C, 1> mean() const {
    return (data_.colwise().sum() / static_cast<double>(data_.rows())).transpose().matrix();
  }

 private:
  GridSpec grid_{};
  Data data_{};
};

using ScalarField = PeriodicField<1>;
using VectorField = PeriodicField<3>;
using SymTensorField = PeriodicField<6>;

/// Storage column of the (r, c) entry of a symmetric tensor.
constexpr int sym_index(int r, int c) {
  if (r == c) return r;
  const int lo = r < c ? r : c;
  const int hi = r < c ? c : r;
  return lo == 0 ? (hi == 1 ? 3 : 4) : 5;
}

inline Mat3 tensor_at(const SymTensorField& f, std::ptrdiff_t p) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = f.data()(p, sym_index(r, c));
  return m;
}

inline void set_tensor(SymTensorField& f, std::ptrdiff_t p, const Mat3& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = r; c < 3; ++c) f.data()(p, sym_index(r, c)) = 0.5 * (m(r, c) + m(c, r));
}

inline Vec3 vector_at(const VectorField& f, std::ptrdiff_t p) { return f.data().row(p).transpose().matrix(); }

/// A field sampled at t_j = j * t_end / n_t, j = 0..n_t.
template <typename Field>
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(const GridSpec& grid) : grid_(grid), slices_(grid.n_t + 1, Field(grid)) {}
  TimeSeries(const GridSpec& grid, std::vector<Field> slices) : grid_(grid), slices_(std::move(slices)) {
    if (static_cast<int>(slices_.size()) != grid.n_t + 1)
      throw Error(ErrorCode::GridMismatch, "slice count must be n_t + 1");
    for (const auto& s : slices_) require_same_space(grid_, s.grid());
  }

  const GridSpec& grid() const { return grid_; }
  int n_slices() const { return static_cast<int>(slices_.size()); }
  double time(int j) const { return grid_.time(j); }
  const Field& operator[](int j) const { return slices_[j]; }
  Field& operator[](int j) { return slices_[j]; }
  const std::vector<Field>& slices() const { return slices_; }

  /// Fourth-order finite-difference time derivative at slice j
  /// (central in the interior, one-sided five-point at the two ends).
  Field derivative(int j) const {
    const int last = grid_.n_t;
    const double inv = 1.0 / (12.0 * grid_.dt());
    auto comb = [&](std::array<int, 5> idx, std::array<double, 5> w) {
      typename Field::Data d = w[0] * slices_[idx[0]].data();
      for (int s = 1; s < 5; ++s) d += w[s] * slices_[idx[s]].data();
      return Field(slices_[j].grid(), d * inv);
    };
    if (j >= 2 && j <= last - 2) return comb({j - 2, j - 1, j, j + 1, j + 2}, {1, -8, 0, 8, -1});
    if (j == 0) return comb({0, 1, 2, 3, 4}, {-25, 48, -36, 16, -3});
    if (j == 1) return comb({0, 1, 2, 3, 4}, {-3, -10, 18, -6, 1});
    if (j == last) return comb({last, last - 1, last - 2, last - 3, last - 4}, {25, -48, 36, -16, 3});
    return comb({last, last - 1, last - 2, last - 3, last - 4}, {3, 10, -18, 6, -1});
  }

  /// Cubic Lagrange interpolation in time from the four nearest slices.
  Field at_time(double t) const {
    const double h = grid_.dt();
    const double s = t / h;
    const int nearest = static_cast<int>(std::lround(s));
    if (std::abs(s - nearest) < 1e-12 && nearest >= 0 && nearest <= grid_.n_t) return slices_[nearest];
    int base = static_cast<int>(std::floor(s)) - 1;
    base = std::clamp(base, 0, grid_.n_t - 3);
    typename Field::Data d = Field::Data::Zero(slices_[0].size(), Field::components);
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) w *= (s - (base + b)) / static_cast<double>(a - b);
      d += w * slices_[base + a].data();
    }
    return Field(slices_[0].grid(), d);
  }

  TimeSeries& operator+=(const TimeSeries& o) {
    for (int j = 0; j < n_slices(); ++j) slices_[j] += o.slices_[j];
    return *this;
  }
  TimeSeries& operator*=(double s) {
    for (auto& f : slices_) f *= s;
    return *this;
  }
  friend TimeSeries operator+(TimeSeries a, const TimeSeries& b) { return a += b; }
  friend TimeSeries operator-(TimeSeries a, const TimeSeries& b) {
    for (int j = 0; j < a.n_slices(); ++j) a[j] -= b[j];
    return a;
  }
  friend TimeSeries operator*(double s, TimeSeries a) { return a *= s; }

 private:
  GridSpec grid_{};
  std::vector<Field> slices_;
};

using ScalarSeries = TimeSeries<ScalarField>;
using VectorSeries = TimeSeries<VectorField>;
using TensorSeries = TimeSeries<SymTensorField>;

}  // namespace eulab
