// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "eulab/spectral.hpp"

namespace eulab {

using Points = Eigen::Array<double, Eigen::Dynamic, 3>;

/// Grid positions of every node, one row per node.
Points grid_points(const GridSpec& grid);

/// Tricubic Lagrange interpolation of a periodic field at arbitrary points,
/// optionally on a spectrally upsampled copy of the field.
template <int C>
class PeriodicInterpolator {
 public:
  using Data = typename PeriodicField<C>::Data;

  explicit PeriodicInterpolator(const PeriodicField<C>& f, int upsample = 1);
  Data operator()(const Points& x) const;
  int resolution() const { return m_; }

 private:
  int m_ = 0;
  double h_ = 0.0;
  Data values_;
};

/// Velocity v(s, x) at arbitrary times and points. Exact Fourier summation when
/// the series has at most `mode_limit` active modes, tricubic interpolation
/// otherwise; cubic Lagrange in time in both cases.
class VelocitySampler {
 public:
  VelocitySampler(const VectorSeries& v, int mode_limit = 64, int upsample = 2);
  Points operator()(double s, const Points& x) const;
  bool exact() const { return exact_; }

 private:
  Points at_slice(int j, const Points& x) const;

  GridSpec grid_;
  bool exact_ = false;
  // exact mode: integer wavevectors, weights and per-slice coefficients
  Eigen::ArrayXXd k_;
  std::vector<Eigen::ArrayXXcd> coeff_;
  // interpolation mode
  std::vector<std::shared_ptr<PeriodicInterpolator<3>>> interp_;
};

enum class FlowMethod {
  Characteristics,  // backward RK4 characteristics per node
  Spectral,         // Eulerian RK4 for the periodic deviation, pseudo-spectral in space
};

struct FlowOptions {
  FlowMethod method = FlowMethod::Characteristics;
  double cfl = 0.5;
  long max_substeps = 100000;  // per output slice
  int mode_limit = 64;
  int upsample = 2;
  /// Force a sub-step size (0: automatic). Used by convergence studies.
  double fixed_step = 0.0;
};

/// Back-to-label map Phi(t, x) solving d_t Phi + v.grad Phi = 0, Phi(t0, x) = x,
/// stored as the periodic deviation D = Phi - x on a subset of the time slices.
struct FlowMap {
  GridSpec grid;
  double t0 = 0.0;
  std::vector<int> slices;
  std::vector<VectorField> deviation;

  /// Position of slice j in `slices`, or -1.
  int find(int j) const;
  /// Phi(t_j, x) evaluated at the nodes (not wrapped to the torus).
  Points values(int idx) const;
  /// Columns d_j D of the deviation; D Phi = Id + grad D.
  std::array<VectorField, 3> deviation_jacobian(int idx) const;
};

/// Flow map anchored at t0 = l / mu on the requested slices (all slices when
/// empty). Throws NotSolenoidal when some slice has |div v| > 1e-8 (scaled by
/// the C^1 norm when that exceeds one), InvalidArgument when t0 lies outside
/// [0, T], CflFailure when the sub-step cap is exceeded.
FlowMap flow_map(const VectorSeries& v, int l, double mu, const FlowOptions& opts = {},
                 std::vector<int> slices = {});
FlowMap flow_map_at(const VectorSeries& v, double t0, const FlowOptions& opts = {}, std::vector<int> slices = {});

/// sup over slices with a full 4th-order stencil in the map of |d_t Phi + v.grad Phi|.
double flow_residual(const FlowMap& phi, const VectorSeries& v);

/// Pullback datum(Phi(t, x)) on the slices of the map.
std::vector<SymTensorField> pullback(const SymTensorField& datum, const FlowMap& phi, int upsample = 2);

/// R^l(t, x) = datum(Phi^l(t, x)), datum = 2 r0^{-1} ||R(t0)||_C0 Id - R(t0, x). The
/// result lives on the slices of a freshly computed flow map (all slices by default).
TensorSeries transported_reynolds(const VectorSeries& v, const TensorSeries& r, int l, double mu, double r0,
                                  const FlowOptions& opts = {});

/// Datum of the transported Reynolds problem at t0.
SymTensorField reynolds_datum(const SymTensorField& r_t0, double r0);

}  // namespace eulab
