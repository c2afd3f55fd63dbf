// SPDX-License-Identifier: Apache-2.0
#include "eulab/convexint.hpp"

#include <cmath>
#include <sstream>

namespace eulab {

double Schedule::lambda(int q) const {
  if (mode == FrequencyMode::Geometric) return lambda0 * std::pow(a, q);
  return std::pow(a, std::pow(2.0, q));
}

double Schedule::delta(int q) const { return std::pow(lambda(q), -c0); }

double Schedule::eps(int q) const { return std::pow(lambda(q + 1), -eps1); }

int Schedule::multiplier(int q) const {
  return std::max(1, static_cast<int>(std::lround(lambda(q + 1) / lambda_bar)));
}

double Schedule::mu_rule(int q) const { return std::sqrt(delta(q)) * lambda(q) / mu_constant; }

double Schedule::mu(int q, double horizon) const {
  const double need = std::max(mu_rule(q) * horizon, min_cells);
  const long m0 = static_cast<long>(std::ceil(need - 1e-9));
  for (long m = m0; m <= 4096; ++m) {
    const double x = m * onset_fraction - 0.5;
    if (std::abs(x - std::round(x)) < 1e-9) return m / horizon;
  }
  return m0 / horizon;
}

void Schedule::validate() const {
  if (!(a > 1)) throw Error(ErrorCode::InvalidArgument, "schedule.a must exceed 1");
  if (!(c0 > 0)) throw Error(ErrorCode::InvalidArgument, "schedule.c0 must be positive");
  if (!(lambda0 > 0) || !(lambda_bar > 0)) throw Error(ErrorCode::InvalidArgument, "frequencies must be positive");
  if (!(mu_constant > 0) || !(min_cells >= 1)) throw Error(ErrorCode::InvalidArgument, "bad time slicing rule");
  if (!(eps1 > 0)) throw Error(ErrorCode::InvalidArgument, "schedule.eps1 must be positive");
  if (!(onset_fraction > 0 && onset_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "schedule.onset_fraction must lie in (0, 1)");
  if (!(mollify_factor > 0)) throw Error(ErrorCode::InvalidArgument, "schedule.mollify_factor must be positive");
}

double smooth_step(double u) {
  if (u <= 0) return 0.0;
  if (u >= 1) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double cutoff(double tau, double eps) {
  const double h = eps / 4.0;
  return std::sqrt(smooth_step((0.5 + h - std::abs(tau)) / (2.0 * h)));
}

Eigen::ArrayXd cutoff_profile(const GridSpec& grid, double mu, int l, double eps) {
  Eigen::ArrayXd c(grid.n_t + 1);
  for (int j = 0; j <= grid.n_t; ++j) c(j) = cutoff(mu * grid.time(j) - l, eps);
  return c;
}

double LadderConfig::mu(int q) const {
  if (q < static_cast<int>(mu_override.size())) return mu_override[q];
  return schedule.mu(q, grid.t_end);
}

SymTensorField initial_shape(const GridSpec& grid) {
  const double ws = grid.wavenumber_scale();
  const auto phi = ScalarField::from_function(grid, [ws](const Vec3& x) {
    const Vec3 y = ws * x;
    return std::cos(y[0] + y[1]) + std::sin(y[1] - y[2]) + 0.5 * std::cos(y[2] + y[0]);
  });
  SymTensorField hess(grid);
  for (int i = 0; i < 3; ++i) {
    const ScalarField di = partial(phi, i);
    for (int j = i; j < 3; ++j) hess.data().col(sym_index(i, j)) = partial(di, j).data().col(0);
  }
  SymTensorField d = trace_free(hess);
  d *= 1.0 / sup_norm(d);
  return d;
}

double initial_profile(double t, double onset, double ramp) { return smooth_step((t - onset) / ramp); }

namespace {

double series_c1(const VectorSeries& v) {
  double m = 0.0;
  for (int j = 0; j < v.n_slices(); ++j) m = std::max(m, norms(v[j]).c1);
  return m;
}

template <int C>
TimeSeries<PeriodicField<C>> low_pass_series(const TimeSeries<PeriodicField<C>>& s, double kappa) {
  std::vector<PeriodicField<C>> out;
  out.reserve(s.n_slices());
  for (int j = 0; j < s.n_slices(); ++j) out.push_back(low_pass(s[j], kappa));
  return TimeSeries<PeriodicField<C>>(s.grid(), std::move(out));
}

// <G, P>_F per node for a symmetric matrix G and a stored tensor field P.
Eigen::ArrayXd frobenius(const Mat3& g, const SymTensorField& p) {
  const auto& d = p.data();
  return g(0, 0) * d.col(0) + g(1, 1) * d.col(1) + g(2, 2) * d.col(2) + 2.0 * g(0, 1) * d.col(3) +
         2.0 * g(0, 2) * d.col(4) + 2.0 * g(1, 2) * d.col(5);
}

VectorField mean_free(VectorField f) {
  const Vec3 m = f.mean();
  for (int c = 0; c < 3; ++c) f.data().col(c) -= m(c);
  return f;
}

// Inverse divergence of the solenoidal part; the gradient part belongs to the pressure.
SymTensorField solenoidal_inverse_divergence(const VectorField& f) {
  return inverse_divergence(mean_free(leray_project(f)));
}

}  // namespace

IterationState initial_state(const LadderConfig& cfg) {
  cfg.grid.validate();
  cfg.schedule.validate();
  const auto& g = cfg.grid;
  const SymTensorField shape = initial_shape(g);
  const double delta1 = cfg.schedule.delta(1);
  IterationState s;
  s.q = 0;
  s.v = VectorSeries(g);
  s.p = ScalarSeries(g);
  s.r = TensorSeries(g);
  for (int j = 0; j <= g.n_t; ++j) {
    const double rho =
        cfg.initial_amplitude * delta1 * initial_profile(cfg.initial_time_scale * g.time(j), cfg.onset(), cfg.ramp());
    s.r[j] = rho * shape;
    s.p[j] = pressure_solve(s.v[j], s.r[j]);
  }
  s.diag.q = 0;
  s.diag.er_residual = residual_ER(s.v, s.p, s.r);
  s.diag.r_c0 = c0_norm(s.r);
  return s;
}

std::vector<ScalarField> amplitudes(const SymTensorField& pulled, double anchor_norm, const DirectionSet& set, int j) {
  if (sup_norm(pulled) > 2.0 * anchor_norm * (1.0 + 1e-9))
    throw Error(ErrorCode::OutsideBall, "transported Reynolds argument leaves the admissible ball");
  const double shift = 2.0 * anchor_norm / set.r0();
  const Eigen::VectorXd c_id = set.coefficients(Mat3::Identity(), j);
  std::vector<ScalarField> out;
  for (std::size_t p = 0; p < set.pairs(j).size(); ++p) {
    ScalarField a(pulled.grid());
    const Eigen::ArrayXd a2 = shift * c_id(p) - frobenius(set.coefficient_matrix(j, static_cast<int>(p)), pulled);
    a.data().col(0) = a2.max(0.0).sqrt();
    out.push_back(std::move(a));
  }
  return out;
}

Perturbation build_perturbation(const IterationState& s, const LadderConfig& cfg, const DirectionSet& set) {
  const auto& g = s.v.grid();
  const auto& sch = cfg.schedule;
  const int q = s.q;
  const double mu = cfg.mu(q);
  const double eps = sch.eps(q);
  const int m = sch.multiplier(q);
  const double ws = g.wavenumber_scale();
  const double kappa = sch.mollify_cutoff(q);
  const int last_l = static_cast<int>(std::ceil(mu * g.t_end - 1e-9));

  const VectorSeries vm = low_pass_series(s.v, kappa);
  const TensorSeries rm = low_pass_series(s.r, kappa);

  Perturbation out;
  out.w1 = VectorSeries(g);
  out.w2 = VectorSeries(g);
  out.transported_sum = TensorSeries(g);
  out.chi2_sum = Eigen::ArrayXd::Zero(g.n_t + 1);
  out.diag.q = q;
  out.diag.mu = mu;
  out.diag.wave_frequency = sch.wave_frequency(q);

  for (int j = 0; j < 2; ++j)
    for (const Vec3i& k : set.pairs(j))
      if (m * k.cwiseAbs().maxCoeff() > g.max_mode())
        throw Error(ErrorCode::InvalidArgument, "stage " + std::to_string(q) + " wave frequency " +
                                                    std::to_string(sch.wave_frequency(q)) + " is not resolved on n = " +
                                                    std::to_string(g.n));

  const Points x0 = grid_points(g);
  double anchor_max = 0.0;
  for (int l = 0; l <= last_l; ++l) {
    const Eigen::ArrayXd chi = cutoff_profile(g, mu, l, eps);
    std::vector<int> support;
    for (int j = 0; j <= g.n_t; ++j)
      if (chi(j) > 0) support.push_back(j);
    if (support.empty()) continue;
    out.chi2_sum += chi.square();
    const double tl = std::min(l / mu, g.t_end);
    const SymTensorField anchor = rm.at_time(tl);
    const double norm = sup_norm(anchor);
    if (norm < cfg.degenerate_floor) {
      ++out.diag.degenerate_slabs;
      if (cfg.strict) throw Error(ErrorCode::DegenerateReynolds, "vanishing Reynolds stress at anchor " + std::to_string(l));
      continue;
    }
    ++out.diag.active_slabs;
    anchor_max = std::max(anchor_max, norm);
    const FlowMap phi = flow_map_at(vm, tl, cfg.flow, support);
    const std::vector<SymTensorField> pulled = pullback(anchor, phi, cfg.pullback_upsample);
    const int jset = (l + q) % 2;
    const auto& pairs = set.pairs(jset);
    const double shift = 2.0 * norm / set.r0();
    TensorSeries kept;
    if (cfg.keep_transported) kept = TensorSeries(g);

    for (std::size_t idx = 0; idx < support.size(); ++idx) {
      const int j = support[idx];
      const double c = chi(j);
      ScalarField shift_field(g);
      shift_field.data().setConstant(shift);
      const SymTensorField rl = times_identity(shift_field) - pulled[idx];
      out.transported_sum[j] += (c * c) * rl;
      if (cfg.keep_transported) kept[j] = rl;

      const std::vector<ScalarField> amp = amplitudes(pulled[idx], norm, set, jset);
      const auto jd = phi.deviation_jacobian(static_cast<int>(idx));
      const auto& dev = phi.deviation[idx].data();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const BeltramiWave wave = make_wave(pairs[p], sch.lambda_bar);
        const Vec3 k = pairs[p].cast<double>();
        const VectorField grad_a = gradient(amp[p]);
        const auto& a = amp[p].data();
        out.diag.amplitude_sup = std::max(out.diag.amplitude_sup, a.maxCoeff());
        const double inv_freq = 1.0 / (m * ws * sch.lambda_bar);
        auto& w1 = out.w1[j].data();
        auto& w2 = out.w2[j].data();
        for (std::ptrdiff_t pt = 0; pt < g.points(); ++pt) {
          const double theta =
              m * ws * (k(0) * (x0(pt, 0) + dev(pt, 0)) + k(1) * (x0(pt, 1) + dev(pt, 1)) + k(2) * (x0(pt, 2) + dev(pt, 2)));
          const Complex e(std::cos(theta), std::sin(theta));
          Vec3 gk;  // (D Phi^T - Id) k
          for (int i = 0; i < 3; ++i)
            gk(i) = k(0) * jd[i].data()(pt, 0) + k(1) * jd[i].data()(pt, 1) + k(2) * jd[i].data()(pt, 2);
          const Vec3 ga(grad_a.data()(pt, 0), grad_a.data()(pt, 1), grad_a.data()(pt, 2));
          const Vec3c be = wave.B * e;
          const Vec3c principal = a(pt) * be;
          const Vec3c corrector = inv_freq * ga.cast<Complex>().cross(be) +
                                  Complex(0.0, a(pt) / sch.lambda_bar) * gk.cast<Complex>().cross(be);
          for (int d = 0; d < 3; ++d) {
            w1(pt, d) += 2.0 * c * principal(d).real();
            w2(pt, d) += 2.0 * c * corrector(d).real();
          }
        }
      }
    }
    if (cfg.keep_transported) out.transported.emplace_back(l, std::move(kept));
  }
  if (anchor_max > 0) out.diag.amplitude_constant = out.diag.amplitude_sup / std::sqrt(anchor_max);

  out.w = VectorSeries(g);
  for (int j = 0; j <= g.n_t; ++j) {
    const VectorField pre = out.w1[j] + out.w2[j];
    out.diag.div_before_projection = std::max(out.diag.div_before_projection, sup_norm(divergence(pre)));
    out.w[j] = mean_free(truncate_nyquist(leray_project(pre)));
    out.diag.leray_displacement = std::max(out.diag.leray_displacement, sup_norm(out.w[j] - pre));
    out.w2[j] = out.w[j] - out.w1[j];
  }
  out.diag.w_c0 = c0_norm(out.w);
  out.diag.w1_c0 = c0_norm(out.w1);
  out.diag.w2_c0 = c0_norm(out.w2);
  out.diag.w_c1 = series_c1(out.w);
  return out;
}

std::pair<TensorSeries, ScalarSeries> build_reynolds(const IterationState& s, const Perturbation& w) {
  const auto& g = s.v.grid();
  TensorSeries r(g);
  ScalarSeries p(g);
  for (int j = 0; j <= g.n_t; ++j) {
    const VectorField& v = s.v[j];
    const VectorField& wj = w.w[j];
    // R((d_t + v.grad) w) + R(w.grad v)
    const VectorField f = w.w.derivative(j) + advect(v, wj) + advect(wj, v);
    SymTensorField gq = solenoidal_inverse_divergence(f);
    // w1 (x) w2 + w2 (x) w
    gq += symmetric_outer(w.w1[j], w.w2[j]);
    gq += outer_self(w.w2[j]);
    // sum_l chi_l^2 (R^l + R)
    gq += w.chi2_sum(j) * s.r[j];
    gq += w.transported_sum[j];
    // R div(w1 (x) w1 - sum_l chi_l^2 R^l)
    gq += solenoidal_inverse_divergence(divergence(outer_self(w.w1[j]) - w.transported_sum[j]));
    r[j] = trace_free(gq);
    p[j] = pressure_solve(v + wj, r[j]);
  }
  return {std::move(r), std::move(p)};
}

double residual_ER(const VectorSeries& v, const ScalarSeries& p, const TensorSeries& r, double nu) {
  double worst = 0.0;
  const int nt = v.grid().n_t;
  for (int j = 1; j < nt; ++j) {
    VectorField res = v.derivative(j) + divergence(outer_self(v[j])) + gradient(p[j]) - divergence(r[j]);
    if (nu != 0.0) res -= nu * laplacian(v[j]);
    worst = std::max(worst, l2_norm(res));
  }
  return worst;
}

IterationState step(const IterationState& s, const LadderConfig& cfg, const DirectionSet& set, Perturbation* keep) {
  Perturbation w = build_perturbation(s, cfg, set);
  auto [r, p] = build_reynolds(s, w);
  IterationState out;
  out.q = s.q + 1;
  out.v = s.v + w.w;
  out.p = std::move(p);
  out.r = std::move(r);
  out.diag = w.diag;
  out.diag.q = out.q;
  out.diag.cauchy = w.diag.w_c0;
  out.diag.r_c0 = c0_norm(out.r);
  out.diag.er_residual = residual_ER(out.v, out.p, out.r);
  if (out.diag.er_residual > cfg.tol_er) {
    std::ostringstream msg;
    msg << "stage " << out.q << ": residual " << out.diag.er_residual << " > " << cfg.tol_er
        << " (||w||_C0 = " << w.diag.w_c0 << ", ||R||_C0 = " << out.diag.r_c0
        << ", Leray displacement = " << w.diag.leray_displacement << ")";
    throw Error(ErrorCode::ResidualExceeded, msg.str());
  }
  if (keep) *keep = std::move(w);
  return out;
}

std::vector<IterationState> run(const LadderConfig& cfg, int q_max) {
  if (q_max < 0) throw Error(ErrorCode::InvalidArgument, "q_max must be nonnegative");
  const DirectionSet set = default_direction_sets(cfg.schedule.lambda_bar);
  std::vector<IterationState> states;
  states.push_back(initial_state(cfg));
  for (int q = 0; q < q_max; ++q) {
    try {
      states.push_back(step(states.back(), cfg, set));
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + std::to_string(q) + ": " + e.what());
    }
  }
  return states;
}

EstimateReport check_estimates(const std::vector<IterationState>& states, const Schedule& schedule, double bound) {
  EstimateReport rep;
  rep.bound = bound;
  for (std::size_t q = 0; q < states.size(); ++q) {
    EstimateRow row;
    row.q = static_cast<int>(q);
    const double sd = std::sqrt(schedule.delta(row.q));
    if (q + 1 < states.size()) {
      row.a1 = states[q + 1].diag.w_c0 / sd;
      row.a2 = states[q + 1].diag.w_c1 / (sd * schedule.lambda(row.q));
    }
    row.a3 = states[q].diag.r_c0 / schedule.delta(row.q + 1);
    rep.pass = rep.pass && row.a1 <= bound && row.a2 <= bound && row.a3 <= bound;
    rep.rows.push_back(row);
  }
  return rep;
}

double c0_norm(const TensorSeries& r) {
  double m = 0.0;
  for (int j = 0; j < r.n_slices(); ++j) m = std::max(m, sup_norm(r[j]));
  return m;
}

double c0_norm(const VectorSeries& v) {
  double m = 0.0;
  for (int j = 0; j < v.n_slices(); ++j) m = std::max(m, sup_norm(v[j]));
  return m;
}

Eigen::ArrayXd energy_profile(const VectorSeries& v) {
  Eigen::ArrayXd e(v.n_slices());
  for (int j = 0; j < v.n_slices(); ++j) {
    const double n = l2_norm(v[j]);
    e(j) = n * n;
  }
  return e;
}

}  // namespace eulab
