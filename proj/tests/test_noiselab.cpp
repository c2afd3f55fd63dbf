// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eulab/noiselab.hpp"
#include "eulab/spectral.hpp"

using namespace eulab;

namespace {

GridSpec grid(int n) {
  GridSpec g;
  g.n = n;
  return g;
}

VectorField shear(const GridSpec& g) {
  return VectorField::from_function(g, [](const Vec3& x) { return Vec3(0.0, std::cos(x(0)), 0.0); });
}

// L f computed on the grid from the fields themselves: 1/2 sum Pi(s.grad Pi(s.grad f)).
VectorField corrector_oracle(const VectorField& f, const NoiseProfile& p) {
  VectorField out(f.grid());
  for (const VectorField& s : sigma_fields(p, f.grid())) {
    const VectorField once = leray_project(advect(s, f));
    out += 0.5 * leray_project(advect(s, once));
  }
  return out;
}

}  // namespace

TEST_CASE("polarizations are orthonormal and orthogonal to k") {
  for (const Vec3i& k : {Vec3i(1, 0, 0), Vec3i(0, 0, 3), Vec3i(2, -1, 4), Vec3i(-3, 3, 3), Vec3i(1, 1, 0)}) {
    const auto a = polarizations(k);
    const Vec3 kh = k.cast<double>().normalized();
    CHECK(std::abs(a[0].norm() - 1.0) < 1e-14);
    CHECK(std::abs(a[1].norm() - 1.0) < 1e-14);
    CHECK(std::abs(a[0].dot(a[1])) < 1e-14);
    CHECK(std::abs(a[0].dot(kh)) < 1e-14);
    CHECK(std::abs(a[1].dot(kh)) < 1e-14);
    CHECK((a[0].cross(a[1]) - kh).norm() < 1e-14);
  }
  CHECK_THROWS_AS(polarizations(Vec3i::Zero()), Error);
}

TEST_CASE("noise profile: shell, normalization, bad input") {
  const NoiseProfile p = NoiseProfile::make(1.0, 2);
  for (const Vec3i& k : p.pairs) {
    CHECK(k.squaredNorm() >= 4);
    CHECK(k.squaredNorm() <= 16);
  }
  // every lattice point of the shell appears as +k or -k exactly once
  int shell = 0;
  for (int x = -4; x <= 4; ++x)
    for (int y = -4; y <= 4; ++y)
      for (int z = -4; z <= 4; ++z) {
        const int k2 = x * x + y * y + z * z;
        if (k2 >= 4 && k2 <= 16) ++shell;
      }
  CHECK(p.shell_size() == shell);
  // theta^2 = 3 nu_T / pairs over 4 fields per pair (alpha x cos/sin)
  CHECK(std::abs(p.family_theta_sum() - 12.0) < 1e-12);

  CHECK(NoiseProfile::make(0.0, 3).theta == 0.0);
  CHECK_THROWS_AS(NoiseProfile::make(1.0, 0), Error);
  CHECK_THROWS_AS(NoiseProfile::make(-1.0, 2), Error);
}

TEST_CASE("N = 1 family: solenoidal, Gram-orthogonal, zero at nu_T = 0") {
  const GridSpec g = grid(8);
  const NoiseProfile p = NoiseProfile::make(0.7, 1);
  const auto fields = sigma_fields(p, g);
  REQUIRE(static_cast<int>(fields.size()) == p.family_size());
  const double expected = 0.5 * p.theta * p.theta * g.volume();
  double worst_div = 0.0, worst_off = 0.0, worst_diag = 0.0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    worst_div = std::max(worst_div, sup_norm(divergence(fields[i])));
    for (std::size_t j = i; j < fields.size(); ++j) {
      const double gij = inner(fields[i], fields[j]);
      if (i == j)
        worst_diag = std::max(worst_diag, std::abs(gij - expected));
      else
        worst_off = std::max(worst_off, std::abs(gij));
    }
  }
  CHECK(worst_div <= 1e-12);
  CHECK(worst_off <= 1e-12 * expected);
  CHECK(worst_diag <= 1e-12 * expected);

  for (const VectorField& f : sigma_fields(NoiseProfile::make(0.0, 1), g)) CHECK(sup_norm(f) == 0.0);
  CHECK_THROWS_AS(sigma_fields(NoiseProfile::make(1.0, 2), g), Error);  // 2N = 4 > max_mode 3
}

TEST_CASE("quadratic form is constant, isotropic and linear in nu_T") {
  const GridSpec g = grid(16);
  const NoiseProfile p = NoiseProfile::make(1.3, 3);
  const SymTensorField s = quadratic_form(p, g);
  const auto rep = quadratic_form_report(p, grid_points(g));
  for (int c = 0; c < 6; ++c) CHECK(s.data().col(c).maxCoeff() - s.data().col(c).minCoeff() <= 1e-12);
  CHECK(rep.x_variation <= 1e-12);
  CHECK(std::abs(rep.trace - 3.0 * 1.3) <= 1e-12);
  CHECK((tensor_at(s, 17) - rep.S).norm() <= 1e-12);

  const auto r4 = quadratic_form_report(NoiseProfile::make(1.0, 4), Points(0, 3));
  const auto r8 = quadratic_form_report(NoiseProfile::make(1.0, 8), Points(0, 3));
  CHECK(r4.anisotropy <= 1e-15);
  CHECK(r8.anisotropy <= r4.anisotropy);

  const auto twice = quadratic_form_report(NoiseProfile::make(2.6, 3), Points(0, 3));
  CHECK((twice.S - 2.0 * rep.S).norm() <= 1e-12);
}

TEST_CASE("corrector symbol: symmetric, nonpositive, matches the grid oracle") {
  const NoiseProfile p = NoiseProfile::make(1.0, 1);
  for (const Vec3 m : {Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0.3, -2, 1.5)}) {
    const Mat3 l = corrector_symbol(p, m);
    CHECK((l - l.transpose()).norm() <= 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat3>(l).eigenvalues().maxCoeff() <= 1e-14);
    CHECK((l * m).norm() <= 1e-13);
  }

  const GridSpec g = grid(16);
  const VectorField f = VectorField::from_function(g, [](const Vec3& x) {
    return Vec3(std::sin(x(1)) + 0.5 * std::cos(x(2)), std::cos(x(2)), 0.3 * std::sin(x(0) + x(1)) + std::sin(x(0)));
  });
  const VectorField fast = corrector_apply(f, p);
  const VectorField slow = corrector_oracle(f, p);
  CHECK(sup_norm(fast - slow) <= 1e-12 * sup_norm(slow));
  CHECK(inner(f, fast) < 0.0);

  const VectorField grad = gradient(ScalarField::from_function(g, [](const Vec3& x) { return std::sin(x(0)); }));
  CHECK_THROWS_AS(corrector_apply(grad, p), Error);
}

TEST_CASE("eddy viscosity approaches 3/5 nu_T, linear in nu_T") {
  const EddyFit f4 = eddy_viscosity_fit(NoiseProfile::make(1.0, 4));
  const EddyFit f8 = eddy_viscosity_fit(NoiseProfile::make(1.0, 8));
  CHECK(f4.ratio >= 0.7);
  CHECK(f4.ratio <= 1.3);
  CHECK(std::abs(f8.ratio - 1.0) < std::abs(f4.ratio - 1.0));
  CHECK(f8.residual < f4.residual);
  CHECK(f4.modes > 0);

  const EddyFit half = eddy_viscosity_fit(NoiseProfile::make(0.5, 4));
  const EddyFit triple = eddy_viscosity_fit(NoiseProfile::make(3.0, 4));
  CHECK(std::abs(half.kappa - 0.5 * f4.kappa) <= 1e-10 * f4.kappa);
  CHECK(std::abs(triple.kappa - 3.0 * f4.kappa) <= 1e-10 * f4.kappa);
  CHECK(std::abs(half.ratio - f4.ratio) <= 1e-10);
  CHECK(eddy_viscosity_fit(NoiseProfile::make(0.0, 4)).kappa == 0.0);
}

TEST_CASE("SDE without noise is heat flow") {
  SdeOptions o;
  o.nu = 0.2;
  o.t_end = 1.0;
  o.n_paths = 2;
  const auto st = simulate_transport_sde(shear(grid(16)), NoiseProfile::make(0.0, 2), o);
  const double exact = std::exp(-2.0 * o.nu * o.t_end);
  CHECK(std::abs(st.mean_energy.back() / st.mean_energy.front() - exact) <= 0.01 * exact);
  CHECK(std::abs(st.fitted_slope - st.heat_slope) <= 0.01 * std::abs(st.heat_slope));
  CHECK(st.std_energy.back() == 0.0);
}

TEST_CASE("SDE with noise decays at the eddy rate") {
  SdeOptions o;
  o.nu = 0.1;
  o.t_end = 0.5;
  o.n_paths = 16;
  o.seed = 11;
  const auto st = simulate_transport_sde(shear(grid(16)), NoiseProfile::make(1.0, 4), o);
  MESSAGE("fitted ", st.fitted_slope, " predicted ", st.predicted_slope);
  CHECK(st.kappa_eff > 0.5);
  CHECK(std::abs(st.fitted_slope - st.predicted_slope) <= 0.25 * std::abs(st.predicted_slope));
  CHECK(st.fitted_slope < st.heat_slope);
}

TEST_CASE("noise produces no energy at nu = 0") {
  SdeOptions o;
  o.nu = 0.0;
  o.t_end = 0.3;
  o.n_paths = 32;
  o.seed = 5;
  const auto st = simulate_transport_sde(shear(grid(16)), NoiseProfile::make(1.0, 3), o);
  const double e0 = st.mean_energy.front();
  const double se = st.std_energy.back() / std::sqrt(static_cast<double>(o.n_paths));
  MESSAGE("mean ", st.mean_energy.back() / e0, " stderr ", se / e0);
  CHECK(std::abs(st.mean_energy.back() - e0) <= 4.0 * se + 1e-3 * e0);
  // energy leaves the initial modes even though the total is conserved
  CHECK(st.mean_low_energy.back() < 0.9 * e0);
}

TEST_CASE("SDE input validation") {
  SdeOptions o;
  o.t_end = 0.01;
  o.n_paths = 1;
  const GridSpec g = grid(16);
  const VectorField grad = gradient(ScalarField::from_function(g, [](const Vec3& x) { return std::sin(x(0)); }));
  CHECK_THROWS_AS(simulate_transport_sde(grad, NoiseProfile::make(1.0, 2), o), Error);
  CHECK_THROWS_AS(simulate_transport_sde(VectorField(g), NoiseProfile::make(1.0, 2), o), Error);
  o.dt = -1.0;
  CHECK_THROWS_AS(simulate_transport_sde(shear(g), NoiseProfile::make(1.0, 2), o), Error);
  o.dt = 0.5;
  o.t_end = 20.0;
  o.nu = 1.0;
  try {
    simulate_transport_sde(shear(g), NoiseProfile::make(30.0, 2), o);
    FAIL("expected Unstable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unstable);
  }
}
