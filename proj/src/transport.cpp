// SPDX-License-Identifier: Apache-2.0
#include "eulab/transport.hpp"

#include <cmath>

namespace eulab {

Points grid_points(const GridSpec& grid) {
  Points x(grid.points(), 3);
  for (std::ptrdiff_t p = 0; p < grid.points(); ++p) x.row(p) = grid.position(p).transpose().array();
  return x;
}

namespace {

// Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset s in [0, 1).
inline std::array<double, 4> cubic_weights(double s) {
  return {-s * (s - 1) * (s - 2) / 6.0, (s + 1) * (s - 1) * (s - 2) / 2.0, -(s + 1) * s * (s - 2) / 2.0,
          (s + 1) * s * (s - 1) / 6.0};
}

// Base slice and weights for cubic interpolation in time.
struct TimeStencil {
  int base = 0;
  int count = 4;
  std::array<double, 4> w{};
};

TimeStencil time_stencil(const GridSpec& g, double t) {
  TimeStencil st;
  const double s = t / g.dt();
  const int nearest = static_cast<int>(std::lround(s));
  if (std::abs(s - nearest) < 1e-12 && nearest >= 0 && nearest <= g.n_t) {
    st.base = nearest;
    st.count = 1;
    st.w = {1.0, 0.0, 0.0, 0.0};
    return st;
  }
  st.base = std::clamp(static_cast<int>(std::floor(s)) - 1, 0, g.n_t - 3);
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (s - (st.base + b)) / static_cast<double>(a - b);
    st.w[a] = w;
  }
  return st;
}

void check_solenoidal(const VectorSeries& v) {
  for (int j = 0; j < v.n_slices(); ++j) {
    const double scale = std::max(1.0, norms(v[j]).c1);
    if (sup_norm(divergence(v[j])) > 1e-8 * scale)
      throw Error(ErrorCode::NotSolenoidal, "transport velocity is not divergence-free at slice " + std::to_string(j));
  }
}

double max_speed(const VectorSeries& v) {
  double m = 0.0;
  for (int j = 0; j < v.n_slices(); ++j) m = std::max(m, sup_norm(v[j]));
  return m;
}

}  // namespace

template <int C>
PeriodicInterpolator<C>::PeriodicInterpolator(const PeriodicField<C>& f, int upsample) {
  const auto& g = f.grid();
  if (upsample < 1) throw Error(ErrorCode::InvalidArgument, "upsample factor must be >= 1");
  m_ = g.n * upsample;
  h_ = g.period / m_;
  if (upsample == 1) {
    values_ = f.data();
  } else {
    values_.resize(static_cast<std::ptrdiff_t>(m_) * m_ * m_, C);
    for (int c = 0; c < C; ++c)
      values_.col(c) = spectral::inverse(spectral::resize(spectral::forward(f.data().col(c), g.n), g.n, m_), m_);
  }
}

template <int C>
typename PeriodicInterpolator<C>::Data PeriodicInterpolator<C>::operator()(const Points& x) const {
  Data out = Data::Zero(x.rows(), C);
  const int m = m_;
  for (std::ptrdiff_t p = 0; p < x.rows(); ++p) {
    std::array<int, 3> base;
    std::array<std::array<double, 4>, 3> w;
    for (int d = 0; d < 3; ++d) {
      const double u = x(p, d) / h_;
      const double fl = std::floor(u);
      base[d] = static_cast<int>(fl) - 1;
      w[d] = cubic_weights(u - fl);
    }
    std::array<std::array<int, 4>, 3> idx;
    for (int d = 0; d < 3; ++d)
      for (int a = 0; a < 4; ++a) idx[d][a] = ((base[d] + a) % m + m) % m;
    Eigen::Array<double, 1, C> acc = Eigen::Array<double, 1, C>::Zero(1, C);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const double wab = w[0][a] * w[1][b];
        const std::ptrdiff_t row = (static_cast<std::ptrdiff_t>(idx[0][a]) * m + idx[1][b]) * m;
        for (int c = 0; c < 4; ++c) acc += (wab * w[2][c]) * values_.row(row + idx[2][c]);
      }
    out.row(p) = acc;
  }
  return out;
}

template class PeriodicInterpolator<1>;
template class PeriodicInterpolator<3>;
template class PeriodicInterpolator<6>;

VelocitySampler::VelocitySampler(const VectorSeries& v, int mode_limit, int upsample) : grid_(v.grid()) {
  const auto& t = mode_table(grid_.n);
  std::vector<Spectrum<3>> spec;
  spec.reserve(v.n_slices());
  double cmax = 0.0;
  for (int j = 0; j < v.n_slices(); ++j) {
    spec.push_back(spectral::forward(v[j]));
    cmax = std::max(cmax, spec.back().abs().maxCoeff());
  }
  std::vector<std::ptrdiff_t> active;
  for (std::ptrdiff_t r = 0; r < t.size() && cmax > 0; ++r) {
    if (t.nyquist(r)) continue;
    bool on = false;
    for (const auto& s : spec) on = on || (s.row(r).abs() > 1e-13 * cmax).any();
    if (on) active.push_back(r);
  }
  exact_ = static_cast<int>(active.size()) <= mode_limit;
  if (exact_) {
    const double ws = grid_.wavenumber_scale();
    const double inv_n3 = 1.0 / grid_.points();
    const auto na = static_cast<std::ptrdiff_t>(active.size());
    k_.resize(na, 3);
    for (std::ptrdiff_t a = 0; a < na; ++a) {
      const auto r = active[a];
      k_(a, 0) = ws * t.kx(r);
      k_(a, 1) = ws * t.ky(r);
      k_(a, 2) = ws * t.kz(r);
    }
    for (const auto& s : spec) {
      Eigen::ArrayXXcd c(na, 3);
      for (std::ptrdiff_t a = 0; a < na; ++a) {
        const auto r = active[a];
        const double weight = (t.kz(r) == 0 ? 1.0 : 2.0) * inv_n3;
        c.row(a) = s.row(r) * weight;
      }
      coeff_.push_back(std::move(c));
    }
  } else {
    for (int j = 0; j < v.n_slices(); ++j)
      interp_.push_back(std::make_shared<PeriodicInterpolator<3>>(v[j], upsample));
  }
}

Points VelocitySampler::at_slice(int j, const Points& x) const {
  if (!exact_) return (*interp_[j])(x);
  Points out = Points::Zero(x.rows(), 3);
  const auto& c = coeff_[j];
  for (std::ptrdiff_t p = 0; p < x.rows(); ++p) {
    for (Eigen::Index a = 0; a < k_.rows(); ++a) {
      const double phase = k_(a, 0) * x(p, 0) + k_(a, 1) * x(p, 1) + k_(a, 2) * x(p, 2);
      const Complex e(std::cos(phase), std::sin(phase));
      for (int d = 0; d < 3; ++d) out(p, d) += (c(a, d) * e).real();
    }
  }
  return out;
}

Points VelocitySampler::operator()(double s, const Points& x) const {
  const TimeStencil st = time_stencil(grid_, s);
  Points out = st.w[0] * at_slice(st.base, x);
  for (int a = 1; a < st.count; ++a) out += st.w[a] * at_slice(st.base + a, x);
  return out;
}

int FlowMap::find(int j) const {
  for (std::size_t i = 0; i < slices.size(); ++i)
    if (slices[i] == j) return static_cast<int>(i);
  return -1;
}

Points FlowMap::values(int idx) const { return grid_points(grid) + deviation[idx].data(); }

std::array<VectorField, 3> FlowMap::deviation_jacobian(int idx) const { return jacobian(deviation[idx]); }

namespace {

FlowMap characteristics(const VectorSeries& v, double t0, const FlowOptions& opts, const std::vector<int>& slices) {
  const auto& g = v.grid();
  FlowMap out;
  out.grid = g;
  out.t0 = t0;
  out.slices = slices;
  const VelocitySampler sampler(v, opts.mode_limit, opts.upsample);
  const double vmax = max_speed(v);
  double ds_max = g.dt();
  if (vmax > 0) ds_max = std::min(ds_max, opts.cfl * g.dx() / vmax);
  if (opts.fixed_step > 0) ds_max = opts.fixed_step;
  const Points x0 = grid_points(g);
  for (int j : slices) {
    const double tau = t0 - g.time(j);
    const long nsteps = std::abs(tau) < 1e-15 ? 0 : static_cast<long>(std::ceil(std::abs(tau) / ds_max - 1e-9));
    if (nsteps > opts.max_substeps) throw Error(ErrorCode::CflFailure, "flow map needs too many sub-steps");
    Points x = x0;
    const double h = nsteps ? tau / nsteps : 0.0;
    double s = g.time(j);
    for (long n = 0; n < nsteps; ++n) {
      const Points k1 = sampler(s, x);
      const Points k2 = sampler(s + 0.5 * h, x + 0.5 * h * k1);
      const Points k3 = sampler(s + 0.5 * h, x + 0.5 * h * k2);
      const Points k4 = sampler(s + h, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      s = g.time(j) + (n + 1) * h;
    }
    out.deviation.emplace_back(g, VectorField::Data(x - x0));
  }
  return out;
}

// d_t D = -v - (v.grad) D for the deviation D = Phi - x.
VectorField deviation_rhs(const VectorSeries& v, double s, const VectorField& d) {
  const VectorField vs = v.at_time(s);
  return -(vs + advect(vs, d));
}

FlowMap eulerian(const VectorSeries& v, double t0, const FlowOptions& opts, const std::vector<int>& slices) {
  const auto& g = v.grid();
  FlowMap out;
  out.grid = g;
  out.t0 = t0;
  out.slices = slices;
  out.deviation.assign(slices.size(), VectorField(g));
  const double vmax = max_speed(v);
  double ds_max = g.dt();
  if (vmax > 0) ds_max = std::min(ds_max, opts.cfl * g.dx() / vmax);
  if (opts.fixed_step > 0) ds_max = opts.fixed_step;

  auto march = [&](int direction) {
    // Targets on this side of t0, ordered away from it.
    std::vector<std::pair<int, int>> targets;  // (slice, position in output)
    for (std::size_t i = 0; i < slices.size(); ++i) {
      const double tau = g.time(slices[i]) - t0;
      if ((direction > 0 && tau >= -1e-15) || (direction < 0 && tau < -1e-15))
        targets.emplace_back(slices[i], static_cast<int>(i));
    }
    std::sort(targets.begin(), targets.end(),
              [&](auto a, auto b) { return direction * a.first < direction * b.first; });
    VectorField d(g);
    double s = t0;
    long total = 0;
    for (auto [j, pos] : targets) {
      const double span = g.time(j) - s;
      const long nsteps = std::abs(span) < 1e-15 ? 0 : static_cast<long>(std::ceil(std::abs(span) / ds_max - 1e-9));
      total += nsteps;
      if (nsteps > opts.max_substeps) throw Error(ErrorCode::CflFailure, "flow map needs too many sub-steps");
      const double h = nsteps ? span / nsteps : 0.0;
      for (long n = 0; n < nsteps; ++n) {
        const VectorField k1 = deviation_rhs(v, s, d);
        const VectorField k2 = deviation_rhs(v, s + 0.5 * h, d + (0.5 * h) * k1);
        const VectorField k3 = deviation_rhs(v, s + 0.5 * h, d + (0.5 * h) * k2);
        const VectorField k4 = deviation_rhs(v, s + h, d + h * k3);
        d += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
      }
      s = g.time(j);
      out.deviation[pos] = d;
    }
    (void)total;
  };
  march(+1);
  march(-1);
  return out;
}

}  // namespace

FlowMap flow_map_at(const VectorSeries& v, double t0, const FlowOptions& opts, std::vector<int> slices) {
  const auto& g = v.grid();
  if (t0 < -1e-12 || t0 > g.t_end * (1 + 1e-12))
    throw Error(ErrorCode::InvalidArgument, "flow map anchor outside [0, T]");
  if (slices.empty())
    for (int j = 0; j <= g.n_t; ++j) slices.push_back(j);
  check_solenoidal(v);
  return opts.method == FlowMethod::Characteristics ? characteristics(v, t0, opts, slices)
                                                    : eulerian(v, t0, opts, slices);
}

FlowMap flow_map(const VectorSeries& v, int l, double mu, const FlowOptions& opts, std::vector<int> slices) {
  if (!(mu > 0)) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
  return flow_map_at(v, l / mu, opts, std::move(slices));
}

double flow_residual(const FlowMap& phi, const VectorSeries& v) {
  double worst = 0.0;
  const double inv = 1.0 / (12.0 * phi.grid.dt());
  for (std::size_t i = 0; i < phi.slices.size(); ++i) {
    const int j = phi.slices[i];
    std::array<int, 5> pos{};
    bool ok = true;
    for (int a = -2; a <= 2; ++a) {
      pos[a + 2] = phi.find(j + a);
      ok = ok && pos[a + 2] >= 0;
    }
    if (!ok) continue;
    VectorField dt = inv * (phi.deviation[pos[0]] - 8.0 * phi.deviation[pos[1]] + 8.0 * phi.deviation[pos[3]] -
                            phi.deviation[pos[4]]);
    const VectorField res = dt + v[j] + advect(v[j], phi.deviation[pos[2]]);
    worst = std::max(worst, sup_norm(res));
  }
  return worst;
}

std::vector<SymTensorField> pullback(const SymTensorField& datum, const FlowMap& phi, int upsample) {
  const PeriodicInterpolator<6> interp(datum, upsample);
  std::vector<SymTensorField> out;
  out.reserve(phi.slices.size());
  for (std::size_t i = 0; i < phi.slices.size(); ++i) {
    if (phi.deviation[i].data().abs().maxCoeff() == 0.0) {
      out.push_back(datum);
      continue;
    }
    out.emplace_back(datum.grid(), interp(phi.values(static_cast<int>(i))));
  }
  return out;
}

SymTensorField reynolds_datum(const SymTensorField& r_t0, double r0) {
  if (!(r0 > 0)) throw Error(ErrorCode::InvalidArgument, "r0 must be positive");
  ScalarField shift(r_t0.grid());
  shift.data().setConstant(2.0 / r0 * sup_norm(r_t0));
  return times_identity(shift) - r_t0;
}

TensorSeries transported_reynolds(const VectorSeries& v, const TensorSeries& r, int l, double mu, double r0,
                                  const FlowOptions& opts) {
  const FlowMap phi = flow_map(v, l, mu, opts);
  const SymTensorField datum = reynolds_datum(r.at_time(l / mu), r0);
  return TensorSeries(v.grid(), pullback(datum, phi, opts.upsample));
}

}  // namespace eulab
