// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eulab/spectral.hpp"
#include "eulab/stochastic.hpp"

using namespace eulab;

namespace {

LadderConfig small_config() {
  LadderConfig cfg;
  cfg.grid.n = 16;
  cfg.grid.n_t = 32;
  return cfg;
}

const std::vector<IterationState>& small_run() {
  static const std::vector<IterationState> states = run(small_config(), 1);
  return states;
}

}  // namespace

TEST_CASE("interpolation weights reproduce at_time") {
  const auto& s = small_run();
  const auto& v = s[1].v;
  for (double t : {0.0, 0.123, 0.5, 0.77, 0.999, 1.0}) {
    const Eigen::VectorXd c = interpolation_weights(v.grid(), t);
    VectorField f(v.grid());
    for (int a = 0; a < c.size(); ++a)
      if (c(a) != 0.0) f += c(a) * v[a];
    CHECK(sup_norm(f - v.at_time(t)) <= 1e-12 * (1.0 + c0_norm(v)));
    CHECK(c.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("alpha scaling") {
  const auto& s = small_run().back();
  SUBCASE("alpha = 1 is the identity") {
    const auto a = alpha_scale(s.v, s.r, s.p, 1.0);
    for (int j = 0; j < s.v.n_slices(); ++j) {
      CHECK(sup_norm(a.v[j] - s.v[j]) == 0.0);
      CHECK(sup_norm(a.r[j] - s.r[j]) == 0.0);
    }
  }
  SUBCASE("alpha = 0 is zero") {
    const auto a = alpha_scale(s.v, s.r, s.p, 0.0);
    CHECK(c0_norm(a.v) == 0.0);
    CHECK(c0_norm(a.r) == 0.0);
  }
  SUBCASE("alpha = 1/4 halves the sup over the first half") {
    const auto a = alpha_scale(s.v, s.r, s.p, 0.25);
    const auto& g = s.v.grid();
    double sup_half = 0.0;
    for (int j = 0; j <= g.n_t; ++j) sup_half = std::max(sup_half, sup_norm(s.v.at_time(0.5 * g.time(j))));
    CHECK(c0_norm(a.v) == doctest::Approx(0.5 * sup_half).epsilon(1e-12));
    // even slices land on base slices
    for (int j = 0; j <= g.n_t; j += 2) CHECK(sup_norm(a.v[j] - 0.5 * s.v[j / 2]) == 0.0);
    CHECK(sup_norm(a.v[0]) == 0.0);
    MESSAGE("resampled residual " << residual_ER(a.v, a.p, a.r) << ", sup |v~| " << c0_norm(a.v));
  }
  CHECK_THROWS_AS(alpha_scale(s.v, s.r, s.p, 1.5), Error);
  CHECK_THROWS_AS(alpha_scale(s.v, s.r, s.p, -0.1), Error);
}

TEST_CASE("scaled pipeline matches the rescaled unscaled pipeline") {
  auto cfg = small_config();
  const auto exact = scaled_perturbation_check(cfg, 1.0, 1);
  CHECK(exact.max_mismatch == 0.0);
  const auto quarter = scaled_perturbation_check(cfg, 0.25, 1);
  MESSAGE("alpha 1/4 mismatch " << quarter.max_mismatch << " transported " << quarter.transported_mismatch);
  CHECK(quarter.pass);
  CHECK(quarter.stages.size() == 2);
  CHECK(quarter.stages[1].v_mismatch < 1e-8);
  const auto generic = scaled_perturbation_check(cfg, 0.3, 1);
  MESSAGE("alpha 0.3 mismatch " << generic.max_mismatch);
  CHECK(generic.max_mismatch < 1e-9);
  CHECK(generic.max_mismatch > 0.0);
  CHECK_THROWS_AS(scaled_perturbation_check(cfg, 0.3, 1, 1e-300, true), Error);
  CHECK_THROWS_AS(scaled_perturbation_check(cfg, 0.0, 1), Error);
}

TEST_CASE("distribution parsing") {
  CHECK(AlphaDistribution::parse("uniform01").kind == AlphaDistribution::Kind::Uniform01);
  const auto t = AlphaDistribution::parse("two_point(1, 0.25, 0.3)");
  CHECK(t.kind == AlphaDistribution::Kind::TwoPoint);
  CHECK(t.alpha2 == 0.25);
  CHECK(t.p == 0.3);
  CHECK(AlphaDistribution::parse("two_point(1,0.25)").p == 0.5);
  CHECK(AlphaDistribution::parse("dirac(0.5)").alpha1 == 0.5);
  CHECK(AlphaDistribution::parse(AlphaDistribution::parse("two_point(1,0.25,0.3)").to_string()).p == 0.3);
  CHECK_THROWS_AS(AlphaDistribution::parse("gauss"), Error);
  CHECK_THROWS_AS(AlphaDistribution::parse("dirac(2)"), Error);
  CHECK_THROWS_AS(AlphaDistribution::parse("dirac(x)"), Error);
}

TEST_CASE("ensembles") {
  const auto& s = small_run();
  SUBCASE("dirac is a singleton; law distances are twice the path distance") {
    const auto e = sample_ensemble(s, 0, AlphaDistribution::parse("dirac(1)"), 5, 3);
    const auto sup = support_diagnostic(e, 1e-9);
    CHECK(sup.singleton);
    CHECK(sup.cluster_count == 1);
    const auto law = law_convergence(e);
    CHECK(law[1] == 0.0);
    CHECK(law[0] == doctest::Approx(2.0 * space_time_l2(s[1].v - s[0].v)).epsilon(1e-10));
  }
  SUBCASE("two point: two clusters at the directly computed distance") {
    const auto e = sample_ensemble(s, 0, AlphaDistribution::parse("two_point(1,0.25,0.5)"), 12, 5);
    const double scale = e.path_norms.back().maxCoeff();
    const auto sup = support_diagnostic(e, 1e-9 * scale);
    CHECK_FALSE(sup.singleton);
    CHECK(sup.cluster_count == 2);
    const auto a = alpha_scale(s[1].v, s[1].r, s[1].p, 1.0);
    const auto b = alpha_scale(s[1].v, s[1].r, s[1].p, 0.25);
    const double direct = space_time_l2(a.v - b.v);
    CHECK(std::abs(sup.max_pairwise - direct) <= 1e-12 * scale);
    CHECK(sup.max_pairwise > 0.1 * space_time_l2(s[1].v));
  }
  SUBCASE("uniform: reproducible, zero initial data, deepest stage at distance zero") {
    const auto e = sample_ensemble(s, 0, AlphaDistribution::parse("uniform01"), 8, 9);
    const auto f = sample_ensemble(s, 0, AlphaDistribution::parse("uniform01"), 8, 9);
    CHECK(e.distances() == f.distances());
    CHECK(e.alphas == f.alphas);
    for (double n0 : e.initial_norms) CHECK(n0 == 0.0);
    CHECK_FALSE(support_diagnostic(e, 1e-9).singleton);
    const auto law = law_convergence(e);
    CHECK(law.size() == 2);
    CHECK(law.back() == 0.0);
    CHECK(law.front() > 0.0);
    // a member materializes to the path that the distances describe
    const auto m = ensemble_member(s, e, 2, 1);
    CHECK(space_time_l2(m.v) == doctest::Approx(e.path_norms.back()(2)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(sample_ensemble(s, 0, AlphaDistribution{}, 0, 1), Error);
  CHECK_THROWS_AS(sample_ensemble(s, 5, AlphaDistribution{}, 3, 1), Error);
}

TEST_CASE("random Reynolds stresses") {
  Schedule sch;
  GridSpec g;
  g.n = 16;
  g.n_t = 16;
  const auto r = random_reynolds(0, sch, g, ReynoldsProcess{}, 4);
  CHECK(c0_norm(r) <= sch.delta(0));
  CHECK(c0_norm(r) == doctest::Approx(0.9 * sch.delta(0)));
  const ModeTable& m = mode_table(g.n);
  double outside = 0.0;
  for (int j = 0; j <= g.n_t; j += 4) {
    CHECK(sup_norm(trace(r[j])) < 1e-12);
    const Spectrum<6> s = spectral::forward(r[j]);
    for (Eigen::Index row = 0; row < m.size(); ++row) {
      const double k = std::sqrt(m.k2(row));
      if (k <= sch.lambda(0) || k > sch.lambda(1) + 1e-12) outside = std::max(outside, s.row(row).abs().maxCoeff());
    }
  }
  CHECK(outside < 1e-9);
  ReynoldsProcess zero;
  zero.sigma = 0.0;
  CHECK(c0_norm(random_reynolds(0, sch, g, zero, 4)) == 0.0);
  ReynoldsProcess big;
  big.sigma = 1e6;
  CHECK_THROWS_AS(random_reynolds(0, sch, g, big, 4), Error);
  const auto again = random_reynolds(0, sch, g, ReynoldsProcess{}, 4);
  CHECK(sup_norm(again[5] - r[5]) == 0.0);
}

TEST_CASE("weak solution membership") {
  GridSpec g;
  g.n = 16;
  g.n_t = 16;
  CHECK(weak_solution_membership(VectorSeries(g), 1e-12));
  const auto& s = small_run();
  // the stage-1 path carries a Reynolds stress of order one, so R = 0 fails
  BatterySpec b;
  b.count = 4;
  CHECK_FALSE(weak_solution_membership(s[1].v, 1e-8, b));
}
