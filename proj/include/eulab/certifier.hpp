// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "eulab/field.hpp"

namespace eulab {

/// phi(t, x) = (1 - t/T)^m (A(x) + (t/T) B(x)) with A, B solenoidal and
/// band-limited to 0 < |k| <= kappa_max. phi(T) = 0 and d_t phi is exact.
struct TestField {
  VectorField a, b;
  int window_power = 2;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  double kappa_max = 4.0;

  VectorField value(double t) const;
  VectorField time_derivative(double t) const;
  /// sup over the grid slices of the spatial C1 norm plus sup |d_t phi|.
  double c1_norm(const GridSpec& grid) const;
};

TestField make_test_field(const GridSpec& grid, double kappa_max, int window_power, std::uint64_t seed);

struct BatterySpec {
  int count = 20;
  double kappa_max = 4.0;
  int window_power = 2;
  std::uint64_t seed = 1;
  double threshold = 1e-5;
  /// Add the initial-datum term int u(0).phi(0) dx (for flows with u(0) != 0).
  bool include_initial_datum = false;
};

std::vector<TestField> make_battery(const GridSpec& grid, const BatterySpec& spec);

/// Unnormalized weak-form residual
///   int_0^T int u.d_t phi + (u (x) u - R) : grad phi + nu u.lap phi dx dt
/// (plus int u(0).phi(0) dx when requested). Space integrals are grid sums of
/// dealiased products, time integrals use Simpson weights.
double weak_form(const VectorSeries& u, const TensorSeries& r, double nu, const TestField& phi,
                 bool include_initial_datum = false);

/// weak_form divided by ||phi||_C1 (||u||^2 + ||u|| + ||R||) with space-time L2 norms of u, R.
/// Throws NotSolenoidal / NonZeroMean for inadmissible u and GridMismatch.
double weak_residual(const VectorSeries& u, const TensorSeries& r, double nu, const TestField& phi,
                     bool include_initial_datum = false);

struct CertificateReport {
  std::vector<double> residuals;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

/// Residuals over a battery of test fields. An empty or zero R tests whether u
/// is a weak solution of the Euler equations.
CertificateReport certify(const VectorSeries& u, const TensorSeries& r, double nu, const BatterySpec& spec);

}  // namespace eulab
