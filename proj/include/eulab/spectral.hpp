// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include "eulab/field.hpp"

namespace eulab {

using Complex = std::complex<double>;

/// Half-complex (r2c) Fourier coefficients of a C-component field:
/// n * n * (n/2 + 1) rows, unnormalized forward transform.
template <int C>
using Spectrum = Eigen::Array<Complex, Eigen::Dynamic, C>;

/// Integer wavevectors and masks of the half-complex layout for one grid size.
struct ModeTable {
  int n = 0;
  int nz = 0;  // n / 2 + 1
  Eigen::ArrayXi kx, ky, kz;
  Eigen::ArrayXd k2;        // |k|^2 in integer units
  Eigen::Array<bool, Eigen::Dynamic, 1> nyquist;

  std::ptrdiff_t size() const { return kx.size(); }
  /// Row of integer mode k in the half-complex layout, or -1 when k is not stored
  /// there (kz < 0) or lies outside the grid.
  std::ptrdiff_t row_of(int ikx, int iky, int ikz) const;
};

/// Shared, immutable mode table for grid size n (built once, thread-safe).
const ModeTable& mode_table(int n);

namespace spectral {

Eigen::ArrayXcd forward(const Eigen::Ref<const Eigen::ArrayXd>& values, int n);
Eigen::ArrayXd inverse(const Eigen::Ref<const Eigen::ArrayXcd>& coeffs, int n);

template <int C>
Spectrum<C> forward(const PeriodicField<C>& f) {
  const int n = f.grid().n;
  Spectrum<C> s(mode_table(n).size(), C);
  for (int c = 0; c < C; ++c) s.col(c) = forward(f.data().col(c), n);
  return s;
}

template <int C>
PeriodicField<C> inverse(const Spectrum<C>& s, const GridSpec& grid) {
  typename PeriodicField<C>::Data d(grid.points(), C);
  for (int c = 0; c < C; ++c) d.col(c) = inverse(s.col(c), grid.n);
  return PeriodicField<C>(grid, std::move(d));
}

/// Zero-pad (m > n) or truncate (m < n) a half-complex spectrum between grid sizes,
/// rescaling so the represented function is unchanged. Nyquist rows are dropped.
Eigen::ArrayXcd resize(const Eigen::Ref<const Eigen::ArrayXcd>& coeffs, int n, int m);

}  // namespace spectral

// ---------------------------------------------------------------------------
// Calculus on periodic fields. All derivative operators drop Nyquist modes.

ScalarField partial(const ScalarField& f, int axis);
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
/// Column-wise divergence, (div R)_i = d_j R_ij.
VectorField divergence(const SymTensorField& r);
VectorField curl(const VectorField& v);
/// Jacobian columns: result[j] = d_j v.
std::array<VectorField, 3> jacobian(const VectorField& v);

template <int C>
PeriodicField<C> laplacian(const PeriodicField<C>& f);

/// Remove the Nyquist planes (modes with some |k_i| = n/2).
template <int C>
PeriodicField<C> truncate_nyquist(const PeriodicField<C>& f);

/// Sharp spectral cutoff: zero every mode with |k| > kappa.
template <int C>
PeriodicField<C> low_pass(const PeriodicField<C>& f, double kappa);

/// Helmholtz-Leray projection onto divergence-free fields. The spatial mean
/// (a constant, hence solenoidal) is kept.
VectorField leray_project(const VectorField& v);

/// Symmetric trace-free S with div S = f for mean-zero f. The per-mode symbol is
///   S(k) = -i/|k|^2 [ k (x) f + f (x) k - (k.f)/2 (k (x) k)/|k|^2 - (k.f)/2 Id ].
/// Throws NonZeroMean when some component of f has mean above 1e-10 ||f||.
SymTensorField inverse_divergence(const VectorField& f);

/// Solve lap p = div( div R - div(v (x) v) ) for mean-zero p. The convective
/// term uses the dealiased product; nu enters only through div(lap v) = 0.
ScalarField pressure_solve(const VectorField& v, const SymTensorField& r, double nu = 0.0);

/// Dealiased (3/2-padded) pointwise products, truncated back to the grid.
SymTensorField outer_self(const VectorField& a);
SymTensorField symmetric_outer(const VectorField& a, const VectorField& b);  // a(x)b + b(x)a
ScalarField dealiased_product(const ScalarField& a, const ScalarField& b);
/// Dealiased directional derivative (a . grad) b.
VectorField advect(const VectorField& a, const VectorField& b);

/// Tensor helpers.
ScalarField trace(const SymTensorField& r);
SymTensorField trace_free(const SymTensorField& r);
SymTensorField times_identity(const ScalarField& s);

struct Norms {
  double sup = 0.0;
  double c1 = 0.0;
  double l2 = 0.0;
};

/// sup: grid max of the pointwise magnitude (Euclidean for vectors, operator
/// norm for tensors). c1: sup plus grid max of the first spatial derivatives.
/// l2: trapezoidal (spectrally exact for band-limited data) L^2 norm.
template <int C>
Norms norms(const PeriodicField<C>& f);

template <typename Field>
Norms norms(const TimeSeries<Field>& f);

template <int C>
double sup_norm(const PeriodicField<C>& f);

template <int C>
double l2_norm(const PeriodicField<C>& f);

template <int C>
double inner(const PeriodicField<C>& a, const PeriodicField<C>& b);

/// Composite Simpson weights over the n_t + 1 slices (n_t even), falling back
/// to trapezoid for odd n_t.
Eigen::ArrayXd time_weights(const GridSpec& grid);

/// L^2([0,T] x T^3) norm of a time series.
template <typename Field>
double space_time_l2(const TimeSeries<Field>& f);

/// Pointwise vector magnitude.
Eigen::ArrayXd magnitude(const VectorField& v);

}  // namespace eulab
