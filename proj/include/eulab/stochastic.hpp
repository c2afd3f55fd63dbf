// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eulab/certifier.hpp"
#include "eulab/convexint.hpp"

namespace eulab {

/// Scaled path v~(t, x) = sqrt(alpha) v(sqrt(alpha) t, x), R~ = alpha R(sqrt(alpha) t, x),
/// p~ = alpha p(sqrt(alpha) t, x) on the same grid. Off-grid times use the cubic
/// interpolation of TimeSeries::at_time.
struct AlphaSample {
  double alpha = 1.0;
  VectorSeries v;
  TensorSeries r;
  ScalarSeries p;
};

AlphaSample alpha_scale(const VectorSeries& v, const TensorSeries& r, const ScalarSeries& p, double alpha);

/// Weights c with f(s) = sum_a c_a f(t_a) for the cubic interpolation used by at_time.
Eigen::VectorXd interpolation_weights(const GridSpec& grid, double s);

struct ScaledStageMismatch {
  int q = 0;
  double v_mismatch = 0.0;  // sup |v~_q - sqrt(alpha) v_q(sqrt(alpha) .)| / sup |sqrt(alpha) v_q|
  double r_mismatch = 0.0;
  double p_mismatch = 0.0;
};

struct ScaledCheckReport {
  double alpha = 1.0;
  std::vector<ScaledStageMismatch> stages;
  double transported_mismatch = 0.0;  // last stage, R~^l against alpha R^l(sqrt(alpha) .)
  double max_mismatch = 0.0;
  double tolerance = 1e-4;
  bool pass = true;
};

/// Builds the alpha-family twice. The unscaled pipeline runs on the horizon
/// sqrt(alpha) T with the same number of slices, so its slice j sits at
/// sqrt(alpha) t_j. The scaled pipeline runs on T with initial datum
/// alpha R0(sqrt(alpha) t) and mu~_q = sqrt(alpha) mu_q. Stage by stage the two
/// must agree after rescaling. Throws MismatchExceeded when `throw_on_mismatch`
/// and the largest relative mismatch exceeds `tol`; AlphaOutOfRange unless 0 < alpha <= 1.
ScaledCheckReport scaled_perturbation_check(const LadderConfig& base, double alpha, int q_max, double tol = 1e-4,
                                            bool throw_on_mismatch = false);

struct AlphaDistribution {
  enum class Kind { Uniform01, TwoPoint, Dirac };
  Kind kind = Kind::Uniform01;
  double alpha1 = 1.0;  // two-point first atom, or the Dirac atom
  double alpha2 = 0.25;
  double p = 0.5;  // probability of alpha1

  /// "uniform01", "two_point(a1,a2,p)", "dirac(a)".
  static AlphaDistribution parse(const std::string& text);
  std::string to_string() const;
};

/// Alpha-scaled members of one pipeline run, held as interpolation
/// coefficients over the base slices. Distances come from Gram matrices of the
/// base slices, so no member is materialized.
struct Ensemble {
  std::uint64_t seed = 0;
  AlphaDistribution distribution;
  GridSpec grid;
  int q_first = 0;
  int q_last = 0;  // deepest stage: the limit proxy
  std::vector<double> alphas;
  std::vector<double> initial_norms;  // ||v~(0)||_L2 per member at the deepest stage
  /// L2([0,T] x T^3) distances per stage p = q_first..q_last (index p - q_first):
  /// within[p](i, j) between members at stage p, cross[p](i, j) between member i
  /// at stage p and member j at the deepest stage.
  std::vector<Eigen::MatrixXd> within, cross;
  std::vector<Eigen::VectorXd> path_norms;  // ||v~_p||_L2 per member

  const Eigen::MatrixXd& distances() const { return within.back(); }
};

/// n members with alpha drawn from `dist`; member i uses the generator seeded by
/// split_seed(seed, i). Paths are recorded for stages q..states.back().q.
Ensemble sample_ensemble(const std::vector<IterationState>& states, int q, const AlphaDistribution& dist, int n,
                         std::uint64_t seed);

/// Materialize member i at stage p (for validation and dumps).
AlphaSample ensemble_member(const std::vector<IterationState>& states, const Ensemble& e, int i, int p);

struct SupportReport {
  bool singleton = true;
  double max_pairwise = 0.0;
  double tol_sep = 0.0;
  int cluster_count = 0;
  std::vector<int> labels;  // single-linkage clusters at tol_sep
};

SupportReport support_diagnostic(const Ensemble& e, double tol_sep);

/// Energy distance 2E|X - Y| - E|X - X'| - E|Y - Y'| (V-statistics) between the
/// stage-p empirical law and the deepest-stage law, for p = q_first..q_last.
std::vector<double> law_convergence(const Ensemble& e);

struct ReynoldsProcess {
  double sigma = -1.0;           // negative: auto-tune to target_fraction * delta_q
  double target_fraction = 0.9;
  int time_modes = 4;            // random Fourier modes per path before smoothing
  double top_weight_power = 2.0; // mode weight (|k| / lambda_{q+1})^power
};

/// Random stress sum_k sigma w_k Z^k_t E_k(x) over one representative of each
/// +-k pair in the shell lambda_q < |k| <= lambda_{q+1} (capped by the grid),
/// with E_k = trace_free(b_k (x) k^ + k^ (x) b_k), b_k = 2 Re(B_k e^{i k.x}), and
/// Z^k = tanh of a random Fourier series, so |Z| < 1. Throws TuningFailure when
/// the shell is empty or an explicit sigma overshoots delta_q.
TensorSeries random_reynolds(int q, const Schedule& schedule, const GridSpec& grid, const ReynoldsProcess& spec,
                             std::uint64_t seed);

/// True when the certifier residual with R = 0 stays below tol over the battery.
bool weak_solution_membership(const VectorSeries& path, double tol, const BatterySpec& battery = {});

}  // namespace eulab
