// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "eulab/spectral.hpp"

namespace eulab {

/// u = u_bar + u_prime with u_bar = low_pass(u, kappa).
struct ScaleDecomposition {
  VectorField u_bar;
  VectorField u_prime;
  double kappa = 0.0;
};

ScaleDecomposition decompose(const VectorField& u, double kappa);

/// Reynolds stress of the filtered decomposition, Lambda(u (x) u) - u_bar (x) u_bar,
/// with Lambda the sharp cutoff at kappa. Products are dealiased.
SymTensorField reynolds_stress(const VectorField& u, double kappa);

/// Vortex coupling sum_k (u'_k . grad) omega_bar - (omega_bar . grad) u'_k.
/// Throws NotSolenoidal when some u'_k has |div u'_k| above 1e-8 (relative to
/// its C^1 norm when that exceeds one).
VectorField vortex_coupling(const VectorField& omega_bar, const std::vector<VectorField>& u_primes);

}  // namespace eulab
