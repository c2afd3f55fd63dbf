// SPDX-License-Identifier: Apache-2.0
#include "eulab/stochastic.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "eulab/random.hpp"
#include "eulab/spectral.hpp"

namespace eulab {

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
}

template <typename Field>
TimeSeries<Field> rescale(const TimeSeries<Field>& f, double alpha, double amplitude) {
  const double ra = std::sqrt(alpha);
  std::vector<Field> out;
  out.reserve(f.n_slices());
  for (int j = 0; j < f.n_slices(); ++j) out.push_back(amplitude * f.at_time(ra * f.time(j)));
  return TimeSeries<Field>(f.grid(), std::move(out));
}

template <typename Field>
double relative_sup_mismatch(const TimeSeries<Field>& a, const TimeSeries<Field>& b, double scale_b) {
  double diff = 0.0, ref = 0.0;
  for (int j = 0; j < a.n_slices(); ++j) {
    diff = std::max(diff, sup_norm(a[j] - scale_b * b[j]));
    ref = std::max(ref, scale_b * sup_norm(b[j]));
  }
  return ref > 0.0 ? diff / ref : diff;
}

// Columns are the flattened slices.
Eigen::MatrixXd stack(const VectorSeries& v) {
  const auto rows = v[0].data().size();
  Eigen::MatrixXd m(rows, v.n_slices());
  for (int j = 0; j < v.n_slices(); ++j) m.col(j) = Eigen::Map<const Eigen::VectorXd>(v[j].data().data(), rows);
  return m;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

Eigen::VectorXd interpolation_weights(const GridSpec& grid, double t) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(grid.n_t + 1);
  const double s = t / grid.dt();
  const int nearest = static_cast<int>(std::lround(s));
  if (std::abs(s - nearest) < 1e-12 && nearest >= 0 && nearest <= grid.n_t) {
    c(nearest) = 1.0;
    return c;
  }
  const int base = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, grid.n_t - 3);
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (s - (base + b)) / static_cast<double>(a - b);
    c(base + a) = w;
  }
  return c;
}

AlphaSample alpha_scale(const VectorSeries& v, const TensorSeries& r, const ScalarSeries& p, double alpha) {
  require_alpha(alpha);
  AlphaSample out;
  out.alpha = alpha;
  out.v = rescale(v, alpha, std::sqrt(alpha));
  out.r = rescale(r, alpha, alpha);
  out.p = rescale(p, alpha, alpha);
  return out;
}

ScaledCheckReport scaled_perturbation_check(const LadderConfig& base, double alpha, int q_max, double tol,
                                            bool throw_on_mismatch) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::AlphaOutOfRange, "the scaled pipeline needs 0 < alpha <= 1");
  const double ra = std::sqrt(alpha);

  LadderConfig unscaled = base;
  unscaled.grid.t_end = ra * base.grid.t_end;
  unscaled.onset_time = base.onset();
  unscaled.ramp_time = base.ramp();
  unscaled.keep_transported = false;
  unscaled.mu_override.clear();
  for (int q = 0; q < q_max; ++q)
    unscaled.mu_override.push_back(q < static_cast<int>(base.mu_override.size())
                                       ? base.mu_override[q]
                                       : base.schedule.mu(q, unscaled.grid.t_end));

  LadderConfig scaled = unscaled;
  scaled.grid.t_end = base.grid.t_end;
  scaled.initial_amplitude = alpha * base.initial_amplitude;
  scaled.initial_time_scale = ra * base.initial_time_scale;
  for (double& m : scaled.mu_override) m *= ra;

  ScaledCheckReport rep;
  rep.alpha = alpha;
  rep.tolerance = tol;
  const DirectionSet set = default_direction_sets(base.schedule.lambda_bar);
  IterationState u = initial_state(unscaled);
  IterationState s = initial_state(scaled);
  auto compare = [&](int q) {
    ScaledStageMismatch m;
    m.q = q;
    m.v_mismatch = relative_sup_mismatch(s.v, u.v, ra);
    m.r_mismatch = relative_sup_mismatch(s.r, u.r, alpha);
    m.p_mismatch = relative_sup_mismatch(s.p, u.p, alpha);
    rep.stages.push_back(m);
    rep.max_mismatch = std::max({rep.max_mismatch, m.v_mismatch, m.r_mismatch, m.p_mismatch});
  };
  compare(0);
  for (int q = 0; q < q_max; ++q) {
    Perturbation wu, ws;
    u = step(u, unscaled, set, &wu);
    s = step(s, scaled, set, &ws);
    compare(q + 1);
    if (q + 1 == q_max) {
      rep.transported_mismatch = relative_sup_mismatch(ws.transported_sum, wu.transported_sum, alpha);
      rep.max_mismatch = std::max(rep.max_mismatch, rep.transported_mismatch);
    }
  }
  rep.pass = rep.max_mismatch <= tol;
  if (throw_on_mismatch && !rep.pass) {
    std::ostringstream msg;
    msg << "alpha = " << alpha << ": relative mismatch " << rep.max_mismatch << " > " << tol;
    throw Error(ErrorCode::MismatchExceeded, msg.str());
  }
  return rep;
}

AlphaDistribution AlphaDistribution::parse(const std::string& text) {
  static const std::regex two(R"(\s*two_point\(\s*([^,\s]+)\s*,\s*([^,\s]+)\s*(?:,\s*([^,\s\)]+)\s*)?\)\s*)");
  static const std::regex dirac(R"(\s*dirac\(\s*([^,\s\)]+)\s*\)\s*)");
  AlphaDistribution d;
  std::smatch m;
  try {
    if (text == "uniform01") {
      d.kind = Kind::Uniform01;
    } else if (std::regex_match(text, m, two)) {
      d.kind = Kind::TwoPoint;
      d.alpha1 = std::stod(m[1]);
      d.alpha2 = std::stod(m[2]);
      if (m[3].matched) d.p = std::stod(m[3]);
    } else if (std::regex_match(text, m, dirac)) {
      d.kind = Kind::Dirac;
      d.alpha1 = std::stod(m[1]);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown alpha distribution '" + text + "'");
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "malformed alpha distribution '" + text + "'");
  }
  if (d.kind != Kind::Uniform01) {
    require_alpha(d.alpha1);
    if (d.kind == Kind::TwoPoint) require_alpha(d.alpha2);
  }
  if (!(d.p >= 0.0 && d.p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "two_point probability outside [0, 1]");
  return d;
}

std::string AlphaDistribution::to_string() const {
  std::ostringstream s;
  s.precision(17);
  switch (kind) {
    case Kind::Uniform01: return "uniform01";
    case Kind::TwoPoint: s << "two_point(" << alpha1 << "," << alpha2 << "," << p << ")"; break;
    case Kind::Dirac: s << "dirac(" << alpha1 << ")"; break;
  }
  return s.str();
}

Ensemble sample_ensemble(const std::vector<IterationState>& states, int q, const AlphaDistribution& dist, int n,
                         std::uint64_t seed) {
  if (states.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble needs a pipeline run");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "ensemble size must be positive");
  if (q < 0 || q > states.back().q) throw Error(ErrorCode::InvalidArgument, "first stage outside the run");
  Ensemble e;
  e.seed = seed;
  e.distribution = dist;
  e.grid = states.back().v.grid();
  e.q_first = q;
  e.q_last = states.back().q;
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(i)));
    double a = dist.alpha1;
    if (dist.kind == AlphaDistribution::Kind::Uniform01) {
      a = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    } else if (dist.kind == AlphaDistribution::Kind::TwoPoint) {
      a = std::bernoulli_distribution(dist.p)(rng) ? dist.alpha1 : dist.alpha2;
    }
    require_alpha(a);
    e.alphas.push_back(a);
  }

  const GridSpec& g = e.grid;
  const int ns = g.n_t + 1;
  const Eigen::ArrayXd tw = time_weights(g);
  std::vector<Eigen::MatrixXd> coeff(n);  // row j: weights of member slice j over base slices
  for (int i = 0; i < n; ++i) {
    coeff[i].resize(ns, ns);
    const double ra = std::sqrt(e.alphas[i]);
    for (int j = 0; j < ns; ++j) coeff[i].row(j) = ra * interpolation_weights(g, ra * g.time(j)).transpose();
  }
  auto stage_of = [&](int p) -> const IterationState& { return states[p]; };
  const Eigen::MatrixXd deep = stack(stage_of(e.q_last).v);
  const Eigen::MatrixXd gram_dd = deep.transpose() * deep * g.cell_volume();

  // sum_j tw_j (X G Y^T)_jj
  auto weighted_diag = [&](const Eigen::MatrixXd& xg, const Eigen::MatrixXd& y) {
    return (tw.matrix().asDiagonal() * (xg.cwiseProduct(y))).sum();
  };

  for (int p = e.q_first; p <= e.q_last; ++p) {
    const Eigen::MatrixXd vp = stack(stage_of(p).v);
    const Eigen::MatrixXd gram_pp = vp.transpose() * vp * g.cell_volume();
    const Eigen::MatrixXd gram_pd = vp.transpose() * deep * g.cell_volume();
    Eigen::MatrixXd within(n, n), cross(n, n);
    Eigen::VectorXd norms(n), deep_norms(n);
    std::vector<Eigen::MatrixXd> cg(n), cgd(n);
    for (int i = 0; i < n; ++i) {
      cg[i] = coeff[i] * gram_pp;
      cgd[i] = coeff[i] * gram_pd;
      norms(i) = weighted_diag(cg[i], coeff[i]);
      deep_norms(i) = weighted_diag(coeff[i] * gram_dd, coeff[i]);
    }
    for (int i = 0; i < n; ++i) {
      within(i, i) = 0.0;
      for (int k = i + 1; k < n; ++k) {
        const Eigen::MatrixXd diff = coeff[i] - coeff[k];
        const double d2 = diff.isZero(0.0) ? 0.0 : weighted_diag(diff * gram_pp, diff);
        within(i, k) = within(k, i) = std::sqrt(std::max(0.0, d2));
      }
      for (int k = 0; k < n; ++k) {
        const double d2 = norms(i) + deep_norms(k) - 2.0 * weighted_diag(cgd[i], coeff[k]);
        cross(i, k) = std::sqrt(std::max(0.0, d2));
      }
    }
    if (p == e.q_last) cross = within;
    e.within.push_back(std::move(within));
    e.cross.push_back(std::move(cross));
    e.path_norms.push_back(norms.cwiseMax(0.0).cwiseSqrt());
  }
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd c0 = coeff[i].row(0).transpose();
    e.initial_norms.push_back(std::sqrt(std::max(0.0, c0.dot(gram_dd * c0))));
  }
  return e;
}

AlphaSample ensemble_member(const std::vector<IterationState>& states, const Ensemble& e, int i, int p) {
  if (i < 0 || i >= static_cast<int>(e.alphas.size())) throw Error(ErrorCode::InvalidArgument, "member index");
  if (p < 0 || p >= static_cast<int>(states.size())) throw Error(ErrorCode::InvalidArgument, "stage index");
  return alpha_scale(states[p].v, states[p].r, states[p].p, e.alphas[i]);
}

SupportReport support_diagnostic(const Ensemble& e, double tol_sep) {
  const Eigen::MatrixXd& d = e.distances();
  const int n = static_cast<int>(d.rows());
  SupportReport rep;
  rep.tol_sep = tol_sep;
  rep.max_pairwise = n > 0 ? d.maxCoeff() : 0.0;
  rep.singleton = rep.max_pairwise <= tol_sep;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      if (d(i, k) <= tol_sep) parent[find_root(parent, i)] = find_root(parent, k);
  std::vector<int> label_of_root(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find_root(parent, i);
    if (label_of_root[r] < 0) label_of_root[r] = rep.cluster_count++;
    rep.labels.push_back(label_of_root[r]);
  }
  return rep;
}

std::vector<double> law_convergence(const Ensemble& e) {
  std::vector<double> out;
  const Eigen::MatrixXd& deep = e.within.back();
  for (std::size_t p = 0; p < e.within.size(); ++p) {
    const double v = 2.0 * e.cross[p].mean() - e.within[p].mean() - deep.mean();
    out.push_back(p + 1 == e.within.size() ? 0.0 : std::max(0.0, v));
  }
  return out;
}

TensorSeries random_reynolds(int q, const Schedule& schedule, const GridSpec& grid, const ReynoldsProcess& spec,
                             std::uint64_t seed) {
  grid.validate();
  if (spec.time_modes < 1) throw Error(ErrorCode::InvalidArgument, "time_modes must be positive");
  const double lo = schedule.lambda(q);
  const double hi = schedule.lambda(q + 1);
  const double bound = schedule.delta(q);
  const int kmax = grid.max_mode();
  TensorSeries out(grid);
  if (spec.sigma == 0.0) return out;

  const double ws = grid.wavenumber_scale();
  std::uint64_t index = 0;
  for (int kx = -kmax; kx <= kmax; ++kx)
    for (int ky = -kmax; ky <= kmax; ++ky)
      for (int kz = 0; kz <= kmax; ++kz) {
        const bool upper = kz > 0 || (kz == 0 && (ky > 0 || (ky == 0 && kx > 0)));
        const double norm = std::sqrt(static_cast<double>(kx * kx + ky * ky + kz * kz));
        if (!upper || norm <= lo || norm > hi) continue;
        const Vec3i k(kx, ky, kz);
        const BeltramiWave wave = make_wave(k, norm);
        const Vec3 kh = k.cast<double>() / norm;
        std::mt19937_64 rng(split_seed(seed, index++));
        std::normal_distribution<double> gauss;
        const double phase0 = 2.0 * std::numbers::pi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const Complex rot(std::cos(phase0), std::sin(phase0));
        std::vector<double> gc(spec.time_modes), gs(spec.time_modes);
        for (int m = 0; m < spec.time_modes; ++m) {
          gc[m] = gauss(rng);
          gs[m] = gauss(rng);
        }
        SymTensorField e(grid);
        for (std::ptrdiff_t pt = 0; pt < grid.points(); ++pt) {
          const Vec3 x = grid.position(pt);
          const double theta = ws * k.cast<double>().dot(x);
          const Vec3c bc = wave.B * (rot * Complex(std::cos(theta), std::sin(theta)));
          const Vec3 b = 2.0 * bc.real();
          set_tensor(e, pt, b * kh.transpose() + kh * b.transpose());
        }
        e = trace_free(e);
        const double weight = std::pow(norm / hi, spec.top_weight_power);
        for (int j = 0; j <= grid.n_t; ++j) {
          const double t = grid.time(j) / grid.t_end;
          double z = 0.0;
          for (int m = 0; m < spec.time_modes; ++m)
            z += gc[m] * std::cos(2.0 * std::numbers::pi * (m + 1) * t) +
                 gs[m] * std::sin(2.0 * std::numbers::pi * (m + 1) * t);
          z = std::tanh(z / std::sqrt(static_cast<double>(spec.time_modes)));
          out[j].data() += (weight * z) * e.data();
        }
      }
  if (index == 0) throw Error(ErrorCode::TuningFailure, "the frequency shell holds no resolved mode");
  const double raw = c0_norm(out);
  if (!(raw > 0.0) || !std::isfinite(raw)) throw Error(ErrorCode::TuningFailure, "random stress vanished");
  const double sigma = spec.sigma < 0.0 ? spec.target_fraction * bound / raw : spec.sigma;
  if (sigma * raw > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "sigma = " << sigma << " gives ||R||_C0 = " << sigma * raw << " > delta_q = " << bound;
    throw Error(ErrorCode::TuningFailure, msg.str());
  }
  out *= sigma;
  return out;
}

bool weak_solution_membership(const VectorSeries& path, double tol, const BatterySpec& battery) {
  return certify(path, TensorSeries(), 0.0, battery).max_residual <= tol;
}

}  // namespace eulab
