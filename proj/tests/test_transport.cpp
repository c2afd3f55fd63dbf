// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eulab/transport.hpp"

using namespace eulab;

namespace {

GridSpec small_grid(int n = 16, double t_end = 1.0, int n_t = 16) {
  GridSpec g;
  g.n = n;
  g.t_end = t_end;
  g.n_t = n_t;
  return g;
}

VectorSeries steady(const GridSpec& g, const VectorField& f) {
  return VectorSeries(g, std::vector<VectorField>(g.n_t + 1, f));
}

VectorField abc(const GridSpec& g, double a = 1.0, double b = 0.8, double c = 0.6) {
  return VectorField::from_function(g, [=](const Vec3& x) {
    return Vec3(a * std::sin(x[2]) + c * std::cos(x[1]), b * std::sin(x[0]) + a * std::cos(x[2]),
                c * std::sin(x[1]) + b * std::cos(x[0]));
  });
}

SymTensorField smooth_tensor(const GridSpec& g) {
  return SymTensorField::from_function(g, [](const Vec3& x) {
    Eigen::Matrix<double, 6, 1> r;
    r << std::sin(x[0]), std::cos(x[1] + x[2]), -std::sin(x[0]) - std::cos(x[1] + x[2]), 0.5 * std::cos(x[2]),
        0.3 * std::sin(x[1]), 0.2 * std::cos(x[0] - x[1]);
    return r;
  });
}

}  // namespace

TEST_CASE("zero velocity gives the identity map") {
  const auto g = small_grid();
  const VectorSeries v(g);
  for (auto method : {FlowMethod::Characteristics, FlowMethod::Spectral}) {
    FlowOptions o;
    o.method = method;
    const auto phi = flow_map(v, 2, 4.0, o);
    for (const auto& d : phi.deviation) CHECK(d.data().abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("constant velocity translates labels") {
  const auto g = small_grid();
  const Vec3 c(0.3, -0.2, 0.7);
  const auto v = steady(g, VectorField::from_function(g, [&](const Vec3&) { return c; }));
  for (auto method : {FlowMethod::Characteristics, FlowMethod::Spectral}) {
    FlowOptions o;
    o.method = method;
    const auto phi = flow_map(v, 1, 3.0, o);
    double err = 0.0;
    for (std::size_t i = 0; i < phi.slices.size(); ++i) {
      const double t = g.time(phi.slices[i]);
      for (int d = 0; d < 3; ++d)
        err = std::max(err, (phi.deviation[i].data().col(d) + c(d) * (t - phi.t0)).abs().maxCoeff());
    }
    CHECK(err <= 1e-12);
    CHECK(flow_residual(phi, v) <= 1e-12);
  }
}

TEST_CASE("characteristics are fourth order in the sub-step") {
  const auto g = small_grid(8, 1.0, 8);
  const auto v = steady(g, abc(g));
  FlowOptions o;
  std::vector<Points> maps;
  for (double h : {0.25, 0.125, 0.0625}) {
    o.fixed_step = h;
    const auto phi = flow_map_at(v, 0.0, o, {8});
    maps.push_back(phi.values(0));
  }
  const double e1 = (maps[0] - maps[1]).abs().maxCoeff();
  const double e2 = (maps[1] - maps[2]).abs().maxCoeff();
  MESSAGE("successive differences " << e1 << " " << e2 << " ratio " << e1 / e2);
  CHECK(e1 / e2 > 16.0 * 0.8);
  CHECK(e1 / e2 < 16.0 * 1.25);
}

TEST_CASE("spectral and characteristic maps agree on a steady Beltrami flow") {
  const auto g = small_grid(16, 0.5, 16);
  const auto v = steady(g, abc(g));
  FlowOptions oc, os;
  os.method = FlowMethod::Spectral;
  const auto a = flow_map_at(v, 0.25, oc);
  const auto b = flow_map_at(v, 0.25, os);
  double err = 0.0;
  for (std::size_t i = 0; i < a.slices.size(); ++i)
    err = std::max(err, (a.deviation[i].data() - b.deviation[i].data()).abs().maxCoeff());
  CHECK(err < 1e-6);
  CHECK(flow_residual(b, v) < 1e-4);
}

TEST_CASE("flow maps of solenoidal fields preserve volume") {
  const auto g = small_grid(16, 0.5, 16);
  const auto v = steady(g, abc(g));
  FlowOptions o;
  o.method = FlowMethod::Spectral;
  const auto phi = flow_map_at(v, 0.0, o, {0, 8, 16});
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto jd = phi.deviation_jacobian(i);
    for (std::ptrdiff_t p = 0; p < g.points(); ++p) {
      Mat3 m = Mat3::Identity();
      for (int col = 0; col < 3; ++col) m.col(col) += vector_at(jd[col], p);
      worst = std::max(worst, std::abs(m.determinant() - 1.0));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("transported Reynolds stress") {
  const auto g = small_grid(16, 1.0, 16);
  TensorSeries r(g);
  for (int j = 0; j <= g.n_t; ++j) r[j] = (1.0 + g.time(j)) * smooth_tensor(g);
  const double r0 = 0.07;
  const int l = 2;
  const double mu = 4.0;
  const auto datum = reynolds_datum(r.at_time(l / mu), r0);

  SUBCASE("zero velocity keeps the datum") {
    const auto rl = transported_reynolds(VectorSeries(g), r, l, mu, r0);
    for (int j = 0; j <= g.n_t; ++j) CHECK((rl[j].data() - datum.data()).abs().maxCoeff() == 0.0);
  }
  SUBCASE("constant velocity translates the datum") {
    const Vec3 c(0.4, 0.1, -0.3);
    const auto v = steady(g, VectorField::from_function(g, [&](const Vec3&) { return c; }));
    FlowOptions o;
    o.upsample = 4;
    const auto rl = transported_reynolds(v, r, l, mu, r0, o);
    CHECK((rl[8].data() - datum.data()).abs().maxCoeff() == 0.0);  // t = t0
    const double t = g.time(13);
    const double shift = 2.0 / r0 * sup_norm(r.at_time(l / mu));
    const double scale = (1.0 + l / mu);
    const auto expect = SymTensorField::from_function(g, [&](const Vec3& x) {
      const Vec3 y = x - c * (t - l / mu);
      Eigen::Matrix<double, 6, 1> e;
      e << std::sin(y[0]), std::cos(y[1] + y[2]), -std::sin(y[0]) - std::cos(y[1] + y[2]), 0.5 * std::cos(y[2]),
          0.3 * std::sin(y[1]), 0.2 * std::cos(y[0] - y[1]);
      e *= -scale;
      e.head<3>().array() += shift;
      return e;
    });
    CHECK((rl[13].data() - expect.data()).abs().maxCoeff() < 1e-4);
  }
  SUBCASE("advection preserves the range and the symmetry") {
    const auto v = steady(g, abc(g));
    FlowOptions o;
    o.method = FlowMethod::Spectral;
    o.upsample = 4;
    const auto rl = transported_reynolds(v, r, l, mu, r0, o);
    const double ref = sup_norm(datum);
    for (int j = 0; j <= g.n_t; j += 4) CHECK(std::abs(sup_norm(rl[j]) - ref) < 1e-2 * ref);
  }
}

TEST_CASE("flow map errors") {
  const auto g = small_grid();
  SUBCASE("compressible velocity") {
    const auto v = steady(g, VectorField::from_function(g, [](const Vec3& x) { return Vec3(std::sin(x[0]), 0, 0); }));
    try {
      flow_map(v, 0, 4.0);
      FAIL("expected NotSolenoidal");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotSolenoidal);
    }
  }
  SUBCASE("sub-step cap") {
    const auto v = steady(g, abc(g));
    FlowOptions o;
    o.max_substeps = 2;
    o.fixed_step = 1e-3;
    try {
      flow_map(v, 0, 4.0, o, {8});
      FAIL("expected CflFailure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CflFailure);
    }
  }
  SUBCASE("anchor beyond the horizon") { CHECK_THROWS_AS(flow_map(VectorSeries(g), 5, 4.0), Error); }
}
