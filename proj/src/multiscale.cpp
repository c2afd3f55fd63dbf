// SPDX-License-Identifier: Apache-2.0
#include "eulab/multiscale.hpp"

namespace eulab {

ScaleDecomposition decompose(const VectorField& u, double kappa) {
  ScaleDecomposition d;
  d.kappa = kappa;
  d.u_bar = low_pass(u, kappa);
  d.u_prime = u - d.u_bar;
  return d;
}

SymTensorField reynolds_stress(const VectorField& u, double kappa) {
  const VectorField u_bar = low_pass(u, kappa);
  return low_pass(outer_self(u), kappa) - outer_self(u_bar);
}

VectorField vortex_coupling(const VectorField& omega_bar, const std::vector<VectorField>& u_primes) {
  VectorField out(omega_bar.grid());
  for (const auto& up : u_primes) {
    require_same_space(omega_bar.grid(), up.grid());
    const double scale = std::max(1.0, norms(up).c1);
    if (sup_norm(divergence(up)) > 1e-8 * scale)
      throw Error(ErrorCode::NotSolenoidal, "vortex_coupling needs divergence-free small scales");
    out += advect(up, omega_bar);
    out -= advect(omega_bar, up);
  }
  return out;
}

}  // namespace eulab
