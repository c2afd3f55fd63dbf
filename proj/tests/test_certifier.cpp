// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eulab/beltrami.hpp"
#include "eulab/certifier.hpp"
#include "eulab/convexint.hpp"
#include "eulab/spectral.hpp"

using namespace eulab;

namespace {

GridSpec grid_of(int n, int n_t) {
  GridSpec g;
  g.n = n;
  g.n_t = n_t;
  return g;
}

VectorField low_mode_flow(const GridSpec& g) {
  return VectorField::from_function(g, [](const Vec3& x) {
    return Vec3(std::sin(x[2]) + 0.5 * std::cos(x[1] + x[2]), 0.8 * std::sin(x[0]) + std::cos(x[2]),
                0.6 * std::sin(x[1]) + 0.8 * std::cos(x[0]));
  });
}

// u = f(t) U with f(0) = 0 and the stress that balances it exactly.
std::pair<VectorSeries, TensorSeries> smooth_pair(const GridSpec& g) {
  const VectorField u = leray_project(low_mode_flow(g));
  const SymTensorField s = inverse_divergence(u);
  const SymTensorField uu = trace_free(outer_self(u));
  VectorSeries v(g);
  TensorSeries r(g);
  const double w = std::numbers::pi / g.t_end;
  for (int j = 0; j <= g.n_t; ++j) {
    const double t = g.time(j);
    const double f = std::sin(w * t) * std::sin(w * t);
    const double df = 2.0 * w * std::sin(w * t) * std::cos(w * t);
    v[j] = f * u;
    r[j] = df * s + (f * f) * uu;
  }
  return {v, r};
}

// Multiply the Fourier mode of largest energy at every slice by `factor`.
VectorSeries corrupt_dominant_mode(const VectorSeries& u, double factor) {
  const auto& g = u.grid();
  Eigen::Index best = 0;
  const Spectrum<3> probe = spectral::forward(u[g.n_t / 2]);
  probe.abs2().rowwise().sum().maxCoeff(&best);
  const ModeTable& m = mode_table(g.n);
  const auto mirror = m.kz(best) == 0 ? m.row_of(-m.kx(best), -m.ky(best), 0) : -1;
  VectorSeries out = u;
  for (int j = 0; j <= g.n_t; ++j) {
    Spectrum<3> s = spectral::forward(u[j]);
    s.row(best) *= factor;
    if (mirror >= 0 && mirror != best) s.row(mirror) *= factor;
    out[j] = spectral::inverse(s, g);
  }
  return out;
}

}  // namespace

TEST_CASE("test fields") {
  const auto g = grid_of(16, 16);
  const TestField f = make_test_field(g, 4.0, 2, 11);
  CHECK(sup_norm(divergence(f.a)) < 1e-10);
  CHECK(sup_norm(divergence(f.b)) < 1e-10);
  CHECK(sup_norm(f.value(g.t_end)) == 0.0);
  const Spectrum<3> s = spectral::forward(f.a);
  const ModeTable& m = mode_table(g.n);
  for (Eigen::Index r = 0; r < m.size(); ++r)
    if (m.k2(r) > 16.0 + 1e-9) CHECK(s.row(r).abs().maxCoeff() < 1e-9);
  // exact time derivative against a centered difference
  const double h = 1e-5;
  const VectorField fd = (1.0 / (2 * h)) * (f.value(0.3 + h) - f.value(0.3 - h));
  CHECK(sup_norm(fd - f.time_derivative(0.3)) < 1e-8);
  const TestField again = make_test_field(g, 4.0, 2, 11);
  CHECK(sup_norm(again.a - f.a) == 0.0);
  CHECK_THROWS_AS(make_test_field(g, 4.0, 1, 1), Error);
}

TEST_CASE("zero candidate has zero residual") {
  const auto g = grid_of(16, 16);
  const auto rep = certify(VectorSeries(g), TensorSeries(g), 0.0, BatterySpec{});
  CHECK(rep.max_residual == 0.0);
  CHECK(rep.pass);
}

TEST_CASE("the weak form is linear in the test field") {
  const auto g = grid_of(16, 16);
  const auto [u, r] = smooth_pair(g);
  const TestField a = make_test_field(g, 3.0, 2, 1);
  const TestField b = make_test_field(g, 3.0, 2, 2);
  TestField c = a;
  c.a = 0.7 * a.a + (-1.3) * b.a;
  c.b = 0.7 * a.b + (-1.3) * b.b;
  const double lhs = weak_form(u, r, 0.01, c);
  const double rhs = 0.7 * weak_form(u, r, 0.01, a) - 1.3 * weak_form(u, r, 0.01, b);
  const double scale = std::abs(weak_form(u, TensorSeries(g), 0.01, a)) + 1.0;
  CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
}

TEST_CASE("exact smooth pair: fourth-order convergence in time") {
  std::vector<double> res;
  for (int nt : {8, 16, 32}) {
    const auto g = grid_of(16, nt);
    const auto [u, r] = smooth_pair(g);
    res.push_back(std::abs(weak_form(u, r, 0.0, make_test_field(g, 3.0, 2, 5))));
  }
  MESSAGE("residuals " << res[0] << " " << res[1] << " " << res[2]);
  CHECK(res[0] / res[1] > 12.0);
  CHECK(res[1] / res[2] > 12.0);
  CHECK(res[1] / res[2] < 20.0);
}

TEST_CASE("single-mode corruption of an exact pair is detected") {
  const auto g = grid_of(16, 32);
  const auto [u, r] = smooth_pair(g);
  BatterySpec spec;
  const auto clean = certify(u, r, 0.0, spec);
  const auto bad = certify(corrupt_dominant_mode(u, 1.1), r, 0.0, spec);
  MESSAGE("clean " << clean.max_residual << " corrupted " << bad.max_residual);
  CHECK(clean.pass);
  CHECK(bad.max_residual >= 1e-4);
  CHECK(bad.max_residual >= 1e3 * clean.max_residual);
}

TEST_CASE("inadmissible candidates are rejected") {
  const auto g = grid_of(16, 8);
  VectorSeries u(g);
  u[3] = VectorField::from_function(g, [](const Vec3& x) { return Vec3(std::sin(x[0]), 0, 0); });
  CHECK_THROWS_AS(certify(u, TensorSeries(g), 0.0, BatterySpec{}), Error);
  VectorSeries c(g);
  c[2].data().col(0).setConstant(1.0);
  CHECK_THROWS_AS(certify(c, TensorSeries(g), 0.0, BatterySpec{}), Error);
  TensorSeries wrong(grid_of(16, 16));
  CHECK_THROWS_AS(weak_form(VectorSeries(g), wrong, 0.0, make_test_field(g, 2.0, 2, 1)), Error);
}

TEST_CASE("steady Beltrami flow with its initial datum") {
  const auto g = grid_of(16, 16);
  WaveCoefficients c{{Vec3i(3, 4, 0), Complex(0.5, 0.1)}, {Vec3i(-3, -4, 0), Complex(0.5, -0.1)},
                     {Vec3i(0, 5, 0), Complex(0.0, 0.3)}, {Vec3i(0, -5, 0), Complex(0.0, -0.3)}};
  const VectorField w = real_beltrami_flow(c, 5.0, g);
  const VectorSeries u(g, std::vector<VectorField>(g.n_t + 1, w));
  BatterySpec spec;
  spec.include_initial_datum = true;
  spec.count = 5;
  const auto rep = certify(u, TensorSeries(g), 0.0, spec);
  CHECK(rep.max_residual < 1e-10);
  spec.include_initial_datum = false;
  spec.kappa_max = 5.0;  // the battery must reach the wave frequency to see u(0)
  CHECK(certify(u, TensorSeries(g), 0.0, spec).max_residual > 1e-3);
}

TEST_CASE("ladder output is certified and corruption is detected") {
  LadderConfig cfg;
  cfg.grid = grid_of(16, 32);
  const auto states = run(cfg, 1);
  BatterySpec spec;
  const auto good = certify(states[1].v, states[1].r, 0.0, spec);
  MESSAGE("pipeline max residual " << good.max_residual);
  CHECK(good.pass);
  const auto first = certify(states[1].v, states[1].r, 0.0, spec);
  CHECK(first.residuals == good.residuals);
}
