// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "eulab/beltrami.hpp"

using namespace eulab;

namespace {

GridSpec grid32() { return GridSpec{}; }

Mat3 reconstruct(const Eigen::VectorXd& gamma, const DirectionSet& set, int j) {
  Mat3 r = Mat3::Zero();
  // 1/2 sum over both signs of gamma^2 (Id - k^k^) = sum over pairs.
  for (std::size_t p = 0; p < set.pairs(j).size(); ++p) {
    const Vec3 kh = set.pairs(j)[p].cast<double>() / set.radius();
    r += gamma(p) * gamma(p) * (Mat3::Identity() - kh * kh.transpose());
  }
  return r;
}

Mat3 random_unit_symmetric(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat3 e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e(i, j) = nd(rng);
  e = (0.5 * (e + e.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat3> es(e);
  return e / es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("canonical wave invariants") {
  for (const Vec3i& k : {Vec3i(5, 0, 0), Vec3i(3, 4, 0), Vec3i(0, -3, 4), Vec3i(-4, 0, 3)}) {
    const auto w = make_wave(k, 5.0);
    CHECK(std::abs(w.A.dot(k.cast<double>())) < 1e-14);
    CHECK(std::abs(w.A.norm() - 1 / std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(w.B.dot(k.cast<Complex>())) < 1e-14);
    const auto wm = make_wave(-k, 5.0);
    CHECK((wm.A - w.A).norm() < 1e-15);
    CHECK((wm.B - w.B.conjugate()).norm() < 1e-15);
  }
  const auto w = make_wave(Vec3i(5, 0, 0), 5.0);
  CHECK(std::abs(w.A(0)) < 1e-15);
  CHECK(std::abs(std::abs(w.B(1)) - 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(std::abs(w.B(2)) - 1 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("make_wave errors") {
  CHECK_THROWS_AS(make_wave(Vec3i(1, 1, 1), 5.0), Error);
  try {
    make_wave(Vec3i(1, 1, 1), 5.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadRadius);
  }
  try {
    make_wave(Vec3i(0, 0, 0), 5.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
}

TEST_CASE("curl eigenrelation for every wave of the default sets") {
  const auto g = grid32();
  const auto set = default_direction_sets(5.0);
  for (int j = 0; j < 2; ++j)
    for (const auto& k : set.pairs(j)) {
      const auto w = real_beltrami_flow({{k, Complex(0.3, 0.8)}, {-k, Complex(0.3, -0.8)}}, 5.0, g);
      CHECK((curl(w).data() - 5.0 * w.data()).abs().maxCoeff() < 1e-12 * 5);
    }
}

TEST_CASE("real Beltrami flow") {
  const auto g = grid32();
  SUBCASE("zero coefficients") { CHECK(sup_norm(real_beltrami_flow({}, 5.0, g)) == 0.0); }
  SUBCASE("single pair is a stationary Euler flow with the quadratic pressure") {
    const auto w = real_beltrami_flow({{Vec3i(5, 0, 0), 1.0}, {Vec3i(-5, 0, 0), 1.0}}, 5.0, g);
    CHECK(sup_norm(divergence(w)) < 1e-12);
    ScalarField half(g);
    half.data().col(0) = 0.5 * magnitude(w).square();
    const auto residual = advect(w, w) + gradient(half);
    CHECK(sup_norm(residual) <= 1e-10);
  }
  SUBCASE("div(W (x) W) is the gradient of |W|^2/2, not of |W|/2") {
    const auto set = default_direction_sets(5.0);
    WaveCoefficients c;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (const auto& k : set.pairs(0)) {
      const Complex a(nd(rng), nd(rng));
      c.push_back({k, a});
      c.push_back({-k, std::conj(a)});
    }
    const auto w = real_beltrami_flow(c, 5.0, g);
    ScalarField sq(g), ab(g);
    sq.data().col(0) = 0.5 * magnitude(w).square();
    ab.data().col(0) = 0.5 * magnitude(w);
    const auto dww = divergence(outer_self(w));
    CHECK(sup_norm(dww - gradient(sq)) <= 1e-10 * sup_norm(dww));
    CHECK(sup_norm(dww - gradient(ab)) > 0.1 * sup_norm(dww));
  }
  SUBCASE("spatial average of W (x) W") {
    const Vec3i k1(3, 4, 0), k2(0, 3, -4);
    const Complex a1(1.0, 0.0), a2(0.0, 2.0);
    const auto w = real_beltrami_flow({{k1, a1}, {-k1, std::conj(a1)}, {k2, a2}, {-k2, std::conj(a2)}}, 5.0, g);
    const auto mean = outer_self(w).mean();
    Mat3 expect = Mat3::Zero();
    for (const auto& [k, a] : std::vector<std::pair<Vec3i, double>>{{k1, 1.0}, {k2, 2.0}}) {
      const Vec3 kh = k.cast<double>() / 5.0;
      // 1/2 sum over +-k of |a|^2 (Id - k^k^).
      expect += a * a * (Mat3::Identity() - kh * kh.transpose());
    }
    CHECK((sym_vec(expect) - mean).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("conjugation is enforced") {
    try {
      real_beltrami_flow({{Vec3i(5, 0, 0), Complex(1, 1)}, {Vec3i(-5, 0, 0), Complex(1, 1)}}, 5.0, g);
      FAIL("expected ConjugationViolated");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConjugationViolated);
    }
  }
}

TEST_CASE("default direction sets") {
  const auto set = default_direction_sets(5.0);
  CHECK(set.vectors(0).size() >= 12);
  CHECK(set.vectors(1).size() >= 12);
  for (const auto& a : set.vectors(0))
    for (const auto& b : set.vectors(1)) CHECK(a != b);
  for (int j = 0; j < 2; ++j) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(set.matrix(j));
    CHECK((svd.singularValues().array() > 1e-10).count() == 6);
  }
  CHECK(set.r0() > 0.0);
  MESSAGE("r0 = " << set.r0());

  try {
    default_direction_sets(1.0);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  CHECK_THROWS_AS(DirectionSet(5.0, set.pairs(0), set.pairs(0)), Error);
}

TEST_CASE("gamma coefficients") {
  const auto set = default_direction_sets(5.0);
  SUBCASE("identity gives equal positive coefficients") {
    for (int j = 0; j < 2; ++j) {
      const auto g = gamma_coefficients(Mat3::Identity(), set, j);
      CHECK(g.minCoeff() > 0);
      CHECK(g.maxCoeff() - g.minCoeff() < 1e-14);
      CHECK((reconstruct(g, set, j) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("far from identity is rejected") {
    try {
      gamma_coefficients(11.0 * Mat3::Identity(), set, 0);
      FAIL("expected OutsideBall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutsideBall);
    }
  }
  SUBCASE("reconstruction on 1000 random matrices in the ball") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    double worst = 0.0, worst_ratio = 1e9;
    for (int s = 0; s < 1000; ++s) {
      const Mat3 r = Mat3::Identity() + set.r0() * ud(rng) * random_unit_symmetric(rng);
      for (int j = 0; j < 2; ++j) {
        const auto g = gamma_coefficients(r, set, j);
        worst = std::max(worst, (reconstruct(g, set, j) - r).cwiseAbs().maxCoeff());
        const auto c = set.coefficients(r, j);
        const auto cid = set.coefficients(Mat3::Identity(), j);
        worst_ratio = std::min(worst_ratio, (c.array() / cid.array()).minCoeff());
      }
    }
    CHECK(worst <= 1e-10);
    CHECK(worst_ratio >= 0.5 - 1e-12);
  }
  SUBCASE("half radius perturbation") {
    std::mt19937_64 rng(5);
    const Mat3 r = Mat3::Identity() + 0.5 * set.r0() * random_unit_symmetric(rng);
    CHECK((reconstruct(gamma_coefficients(r, set, 1), set, 1) - r).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("affine linearity and evenness") {
    std::mt19937_64 rng(6);
    const Mat3 r1 = Mat3::Identity() + 0.4 * set.r0() * random_unit_symmetric(rng);
    const Mat3 r2 = Mat3::Identity() + 0.4 * set.r0() * random_unit_symmetric(rng);
    for (int j = 0; j < 2; ++j) {
      const auto lhs = set.coefficients(r1 + r2 - Mat3::Identity(), j);
      const Eigen::VectorXd rhs = set.coefficients(r1, j) + set.coefficients(r2, j) - set.coefficients(Mat3::Identity(), j);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("the ball radius is sharp for the nuclear-norm bound") {
    // Along the worst direction the coefficient reaches exactly half its value at Id.
    const int j = 0;
    double best = 1e9;
    Mat3 worst_e;
    int worst_p = 0;
    for (std::size_t p = 0; p < set.pairs(j).size(); ++p) {
      const Mat3 g = set.coefficient_matrix(j, int(p));
      Eigen::SelfAdjointEigenSolver<Mat3> es(g);
      const double nuc = es.eigenvalues().cwiseAbs().sum();
      const double cid = set.coefficients(Mat3::Identity(), j)(p);
      if (cid / (2 * nuc) < best) {
        best = cid / (2 * nuc);
        worst_p = int(p);
        Mat3 e = Mat3::Zero();
        for (int i = 0; i < 3; ++i) {
          const Vec3 v = es.eigenvectors().col(i);
          e -= (es.eigenvalues()(i) >= 0 ? 1.0 : -1.0) * v * v.transpose();
        }
        worst_e = e;
      }
    }
    const Mat3 r = Mat3::Identity() + set.r0() * worst_e;
    const double ratio = set.coefficients(r, j)(worst_p) / set.coefficients(Mat3::Identity(), j)(worst_p);
    CHECK(ratio == doctest::Approx(0.5).epsilon(1e-9));
  }
}
