// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eulab/beltrami.hpp"
#include "eulab/transport.hpp"

namespace eulab {

enum class FrequencyMode { DoubleExponential, Geometric };

/// Frequencies, amplitudes and time slicing of the iteration.
///
/// The stage-q perturbation oscillates at the realized frequency
/// m_q * lambda_bar, m_q = max(1, round(lambda_{q+1} / lambda_bar)): the waves
/// are the direction sets scaled by the integer m_q, so |m_q k| approximates
/// lambda_{q+1} while staying on the integer lattice.
struct Schedule {
  double a = 2.0;
  double c0 = 0.1;
  FrequencyMode mode = FrequencyMode::Geometric;
  double lambda0 = 2.5;
  double lambda_bar = 5.0;
  double mu_constant = 5.0;   // mu_q = delta_q^{1/2} lambda_q / mu_constant before rounding
  double min_cells = 4.0;     // mu_q T >= min_cells
  double eps1 = 0.125;
  double onset_fraction = 0.25;  // t0 = onset_fraction * T
  double mollify_factor = 1.5;   // (v, R) low-passed at mollify_factor * lambda_q

  double lambda(int q) const;
  double delta(int q) const;
  /// lambda_{q+1}^{-eps1}: relative width of the cutoff transitions.
  double eps(int q) const;
  int multiplier(int q) const;
  double wave_frequency(int q) const { return multiplier(q) * lambda_bar; }
  double mollify_cutoff(int q) const { return mollify_factor * lambda(q); }
  /// The raw rule delta_q^{1/2} lambda_q / mu_constant.
  double mu_rule(int q) const;
  /// mu_q used on horizon T: the smallest M / T >= max(mu_rule, min_cells / T)
  /// with M integer and M * onset_fraction - 1/2 integer, so T is an anchor and
  /// the onset time is a slab boundary. Falls back to ceil when no such M <= 4096.
  double mu(int q, double horizon) const;
  void validate() const;
};

/// Smooth step 0 -> 1 on [0, 1] built from exp(-1/u).
double smooth_step(double u);

/// chi with chi(tau)^2 + chi(tau - 1)^2 = 1, support (-1/2 - eps/4, 1/2 + eps/4).
double cutoff(double tau, double eps);
/// Values chi(mu t_j - l) on all slices of the grid.
Eigen::ArrayXd cutoff_profile(const GridSpec& grid, double mu, int l, double eps);

struct LadderConfig {
  GridSpec grid{};
  Schedule schedule{};
  double tol_er = 1e-6;
  FlowOptions flow{FlowMethod::Spectral};
  int pullback_upsample = 4;
  bool strict = false;           // DegenerateReynolds becomes an error
  double degenerate_floor = 1e-14;
  // Initial datum R0 = amplitude * rho(time_scale * t) * D(x).
  double onset_time = -1.0;  // absolute; negative means onset_fraction * T
  double ramp_time = -1.0;   // absolute; negative means T / 2
  double initial_amplitude = 1.0;
  double initial_time_scale = 1.0;
  /// Explicit mu_q per stage (empty: schedule rule).
  std::vector<double> mu_override;
  bool keep_transported = false;

  double onset() const { return onset_time >= 0 ? onset_time : schedule.onset_fraction * grid.t_end; }
  double ramp() const { return ramp_time >= 0 ? ramp_time : 0.5 * grid.t_end; }
  double mu(int q) const;
};

struct StageDiagnostics {
  int q = 0;
  double er_residual = 0.0;
  double r_c0 = 0.0;
  double w_c0 = 0.0;
  double w_c1 = 0.0;
  double w1_c0 = 0.0;
  double w2_c0 = 0.0;
  double leray_displacement = 0.0;
  double div_before_projection = 0.0;
  double cauchy = 0.0;  // ||v_q - v_{q-1}||_C0
  double mu = 0.0;
  double wave_frequency = 0.0;
  double amplitude_sup = 0.0;
  double amplitude_constant = 0.0;  // sup a / sup_l ||R(l/mu)||^{1/2}
  int active_slabs = 0;
  int degenerate_slabs = 0;
};

struct IterationState {
  int q = 0;
  VectorSeries v;
  ScalarSeries p;
  TensorSeries r;
  StageDiagnostics diag;
};

/// Perturbation of one stage with its pieces.
struct Perturbation {
  VectorSeries w1, w2, w;
  TensorSeries transported_sum;  // sum_l chi_l^2 R^l
  Eigen::ArrayXd chi2_sum;       // sum_l chi_l^2 per slice
  std::vector<std::pair<int, TensorSeries>> transported;  // (l, R^l) when kept, zero off support
  StageDiagnostics diag;
};

/// Smooth trace-free symmetric field D = Hess(phi) - lap(phi)/3 Id with unit C0
/// norm; div D is a gradient so (0, p, rho D) solves the Euler-Reynolds system.
SymTensorField initial_shape(const GridSpec& grid);
double initial_profile(double t, double onset, double ramp);

IterationState initial_state(const LadderConfig& cfg);

/// Amplitudes a^{kl} on the given slice for every +- pair of the set.
/// `pulled` is R(l/mu) composed with Phi^l on that slice; `anchor_norm` is
/// ||R(l/mu)||_C0. Throws OutsideBall when the argument leaves B_{r0}(Id).
std::vector<ScalarField> amplitudes(const SymTensorField& pulled, double anchor_norm, const DirectionSet& set, int j);

Perturbation build_perturbation(const IterationState& s, const LadderConfig& cfg, const DirectionSet& set);

/// Reynolds update G_q followed by trace removal; returns (R_{q+1}, p_{q+1}).
std::pair<TensorSeries, ScalarSeries> build_reynolds(const IterationState& s, const Perturbation& w);

/// Euler-Reynolds residual sup_j ||d_t v + div(v (x) v) + grad p - nu lap v - div R||_{L2}
/// over the interior slices, time derivative by the series' finite differences.
double residual_ER(const VectorSeries& v, const ScalarSeries& p, const TensorSeries& r, double nu = 0.0);

IterationState step(const IterationState& s, const LadderConfig& cfg, const DirectionSet& set,
                    Perturbation* keep = nullptr);
std::vector<IterationState> run(const LadderConfig& cfg, int q_max);

struct EstimateRow {
  int q = 0;
  double a1 = 0.0;  // ||w_{q+1}||_C0 / delta_q^{1/2}
  double a2 = 0.0;  // ||w_{q+1}||_C1 / (delta_q^{1/2} lambda_q)
  double a3 = 0.0;  // ||R_q||_C0 / delta_{q+1}
};

struct EstimateReport {
  std::vector<EstimateRow> rows;
  double bound = 10.0;
  bool pass = true;
};

EstimateReport check_estimates(const std::vector<IterationState>& states, const Schedule& schedule,
                               double bound = 10.0);

/// Sup over slices of the operator norm of a tensor series.
double c0_norm(const TensorSeries& r);
double c0_norm(const VectorSeries& v);
/// Kinetic energy ||v(t_j)||^2_{L2} per slice.
Eigen::ArrayXd energy_profile(const VectorSeries& v);

}  // namespace eulab
