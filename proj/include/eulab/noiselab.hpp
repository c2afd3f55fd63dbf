// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "eulab/field.hpp"
#include "eulab/transport.hpp"

namespace eulab {

/// {a_1, a_2, k/|k|} orthonormal, a_1 = normalize(k x e) with e the first basis
/// vector not parallel to k, a_2 = k^ x a_1.
std::array<Vec3, 2> polarizations(const Vec3i& k);

/// Shell noise sigma_{k,alpha} = theta e_{k,alpha} on D_N = {N <= |k| <= 2N}:
/// e_{k,alpha} = a_{k,alpha} cos(k.x), e_{-k,alpha} = a_{k,alpha} sin(k.x) for k in
/// the upper half lattice.
///
/// Counting convention: ||theta||^2 is normalized so that
/// trace(1/2 sum_{k,alpha} sigma (x) sigma) = 3 ||theta||^2 exactly, i.e. the
/// displayed identity 1/2 sum sigma (x) sigma ~ ||theta||^2 Id holds in trace with
/// constant one. With ||theta||^2 = nu_T this gives theta_k^2 = 6 nu_T / |D_N|
/// (|D_N| counts +k and -k), and the corrector tends to (3/5) nu_T lap as N grows.
struct NoiseProfile {
  double nu_t = 1.0;
  int N = 4;
  double period = 2.0 * std::numbers::pi;
  std::vector<Vec3i> pairs;  // one representative per +-k
  double theta = 0.0;        // common value of theta_k on D_N

  static NoiseProfile make(double nu_t, int N, double period = 2.0 * std::numbers::pi);
  int shell_size() const { return 2 * static_cast<int>(pairs.size()); }  // |D_N|
  int family_size() const { return 2 * shell_size(); }                   // alpha x (+-k)
  double wavenumber_scale() const { return 2.0 * std::numbers::pi / period; }
  /// sum over the alpha- and +-k-counted family of theta_k^2.
  double family_theta_sum() const { return family_size() * theta * theta; }
};

/// All 2 |D_N| fields on the grid. Requires 2N <= grid.max_mode().
std::vector<VectorField> sigma_fields(const NoiseProfile& profile, const GridSpec& grid);

/// 1/2 sum sigma (x) sigma at one point, by direct summation over the family.
Mat3 quadratic_form_at(const NoiseProfile& profile, const Vec3& x);
/// The same on every grid node.
SymTensorField quadratic_form(const NoiseProfile& profile, const GridSpec& grid);

struct QuadraticFormReport {
  Mat3 S = Mat3::Zero();       // closed form 1/2 theta^2 sum_pairs (Id - k^ k^), from integer moments
  double c = 0.0;              // trace(S) / 3
  double anisotropy = 0.0;     // ||S - c Id||_op / c
  double trace = 0.0;
  double x_variation = 0.0;    // max over sampled points of ||S(x) - S||_op
};

QuadraticFormReport quadratic_form_report(const NoiseProfile& profile, const Points& samples);

/// Symbol of the Ito corrector L f = 1/2 sum Pi(sigma.grad Pi(sigma.grad f)) at
/// physical wavevector m, acting on polarizations orthogonal to m:
///   L(m) = -1/4 theta^2 sum_{pairs, alpha, s = +-1} (a_alpha.m)^2 P_m P_{m + s k} P_m.
/// Exact for band-limited f.
Mat3 corrector_symbol(const NoiseProfile& profile, const Vec3& m);

/// L f for a solenoidal band-limited f (NotSolenoidal otherwise).
VectorField corrector_apply(const VectorField& f, const NoiseProfile& profile);

struct EddyFit {
  double kappa = 0.0;      // least-squares kappa in L f ~ kappa lap f
  double residual = 0.0;   // ||L f - kappa lap f|| / ||L f|| over the battery
  double ratio = 0.0;      // kappa / (0.6 nu_T)
  int modes = 0;
};

/// Fit over the battery of all Fourier modes 0 < |m| <= test_kmax with both
/// polarizations orthogonal to m.
EddyFit eddy_viscosity_fit(const NoiseProfile& profile, double test_kmax = 2.0);

struct SdeOptions {
  double nu = 0.0;
  double dt = 1e-3;
  double t_end = 0.5;
  int n_paths = 64;
  std::uint64_t seed = 1;
  double delta = 0.1;      // H^{-delta}
  int record_every = 10;
  int closure_hops = 1;    // Galerkin mode set: support of omega0 plus this many scatterings
};

struct SdeStatistics {
  std::vector<double> times;
  std::vector<double> mean_energy, std_energy;          // ||omega||_L2^2
  std::vector<double> mean_low_energy, std_low_energy;  // energy on the modes of omega0
  std::vector<double> mean_log_low_energy;
  std::vector<double> mean_hminus;                      // ||omega||_{H^-delta}^2
  int modes = 0;
  int noise_fields = 0;
  int links = 0;                 // scattering links i -> i +- k over all pairs
  double stability_bound = 0.0;  // dt below which Euler-Maruyama is mean-square stable (0.1 / ||drift||)
  double low_mode_k2 = 0.0;      // |k0|^2 of the initial data (physical units)
  double kappa_eff = 0.0;        // -L(k0) k0-projection / |k0|^2
  double predicted_slope = 0.0;  // -2 (nu + kappa_eff) |k0|^2
  double fitted_slope = 0.0;     // regression of mean_log_low_energy on t
  double heat_slope = 0.0;       // -2 nu |k0|^2
  double max_energy_ratio = 0.0;
};

/// Euler-Maruyama for d omega = (nu lap omega + L omega) dt - sum Pi(sigma.grad omega) dW
/// on a Galerkin mode set grown from the support of omega0 by `closure_hops`
/// scatterings. Modes carry their scattering generation and the noise only links
/// adjacent generations (with one hop: a star around the initial modes). The
/// corrector is assembled from the same links, so the Ito energy identity holds
/// exactly on the truncated system. Throws Unstable if the energy of some
/// path exceeds 10x its initial value, NotSolenoidal for bad omega0.
SdeStatistics simulate_transport_sde(const VectorField& omega0, const NoiseProfile& profile, const SdeOptions& opts);

}  // namespace eulab
