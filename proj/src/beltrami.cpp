// SPDX-License-Identifier: Apache-2.0
#include "eulab/beltrami.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "eulab/random.hpp"

namespace eulab {

namespace {

bool on_sphere(const Vec3i& k, double radius) {
  const double k2 = k.cast<double>().squaredNorm();
  return std::abs(k2 - radius * radius) <= 1e-9 * std::max(1.0, radius * radius);
}

Mat3 projector_complement(const Vec3& khat) { return Mat3::Identity() - khat * khat.transpose(); }

}  // namespace

BeltramiWave make_wave(const Vec3i& k, double radius) {
  if (k.isZero()) throw Error(ErrorCode::ZeroVector, "Beltrami wave needs k != 0");
  if (!on_sphere(k, radius)) throw Error(ErrorCode::BadRadius, "|k| differs from the wave radius");
  const Vec3 kd = k.cast<double>();
  Vec3 e = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    e.setZero();
    e(i) = 1.0;
    if (kd.cross(e).norm() > 1e-12) break;
  }
  Vec3 a = kd.cross(e).normalized();
  for (int i = 0; i < 3; ++i)
    if (std::abs(a(i)) > 1e-12) {
      if (a(i) < 0) a = -a;
      break;
    }
  BeltramiWave w;
  w.k = k;
  w.radius = radius;
  w.A = a / std::sqrt(2.0);
  const Vec3 kxa = (kd / kd.norm()).cross(w.A);
  w.B = w.A.cast<Complex>() + Complex(0, 1) * kxa.cast<Complex>();
  return w;
}

VectorField real_beltrami_flow(const WaveCoefficients& coeffs, double radius, const GridSpec& grid) {
  double amax = 0.0;
  for (const auto& [k, a] : coeffs) amax = std::max(amax, std::abs(a));
  auto lookup = [&](const Vec3i& k) {
    Complex sum = 0.0;
    for (const auto& [kk, a] : coeffs)
      if (kk == k) sum += a;
    return sum;
  };
  for (const auto& [k, a] : coeffs) {
    if (std::abs(lookup(-k) - std::conj(lookup(k))) > 1e-12 * std::max(amax, 1e-300))
      throw Error(ErrorCode::ConjugationViolated, "coefficients must satisfy a_{-k} = conj(a_k)");
  }
  const int n = grid.n;
  const double ws = grid.wavenumber_scale();
  Eigen::ArrayXXcd acc = Eigen::ArrayXXcd::Zero(grid.points(), 3);
  for (const auto& [k, a] : coeffs) {
    if (a == Complex(0.0)) continue;
    const BeltramiWave w = make_wave(k, radius);
    std::array<Eigen::ArrayXcd, 3> ph;
    for (int d = 0; d < 3; ++d) {
      ph[d].resize(n);
      for (int i = 0; i < n; ++i) ph[d](i) = std::polar(1.0, ws * k(d) * i * grid.dx());
    }
    std::ptrdiff_t p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Complex pij = a * ph[0](i) * ph[1](j);
        for (int l = 0; l < n; ++l, ++p) {
          const Complex e = pij * ph[2](l);
          for (int c = 0; c < 3; ++c) acc(p, c) += w.B(c) * e;
        }
      }
  }
  return VectorField(grid, acc.real());
}

DirectionSet::Vec6 sym_vec(const Mat3& r) {
  DirectionSet::Vec6 v;
  v << r(0, 0), r(1, 1), r(2, 2), r(0, 1), r(0, 2), r(1, 2);
  return v;
}

DirectionSet::DirectionSet(double radius, std::vector<Vec3i> set1, std::vector<Vec3i> set2)
    : radius_(radius), pairs_{std::move(set1), std::move(set2)} {
  if (!(radius > 0)) throw Error(ErrorCode::BadRadius, "radius must be positive");
  for (int j = 0; j < 2; ++j)
    for (const auto& k : pairs_[j]) {
      if (k.isZero()) throw Error(ErrorCode::ZeroVector, "direction set contains k = 0");
      if (!on_sphere(k, radius)) throw Error(ErrorCode::BadRadius, "direction off the sphere");
    }
  for (int j = 0; j < 2; ++j)
    for (std::size_t p = 0; p < pairs_[j].size(); ++p)
      for (std::size_t q = p + 1; q < pairs_[j].size(); ++q)
        if (pairs_[j][p] == pairs_[j][q] || pairs_[j][p] == -pairs_[j][q])
          throw Error(ErrorCode::InvalidArgument, "repeated +- pair in a direction set");
  for (const auto& a : pairs_[0])
    for (const auto& b : pairs_[1])
      if (a == b || a == -b) throw Error(ErrorCode::InvalidArgument, "direction sets must be disjoint");

  r0_ = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 2; ++j) {
    const auto np = static_cast<Eigen::Index>(pairs_[j].size());
    m_[j].resize(6, np);
    for (Eigen::Index p = 0; p < np; ++p)
      m_[j].col(p) = sym_vec(projector_complement(pairs_[j][p].cast<double>() / radius));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m_[j]);
    const auto& sv = svd.singularValues();
    const Eigen::Index rank = (sv.array() > 1e-10 * sv(0)).count();
    if (rank < 6) throw Error(ErrorCode::RankDeficient, "direction set does not span the symmetric matrices");
    pinv_[j] = m_[j].completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::VectorXd c_id = coefficients(Mat3::Identity(), j);
    for (Eigen::Index p = 0; p < np; ++p) {
      if (!(c_id(p) > 0))
        throw Error(ErrorCode::RankDeficient, "identity has a nonpositive coefficient in this direction set");
      Eigen::SelfAdjointEigenSolver<Mat3> es(coefficient_matrix(j, static_cast<int>(p)), Eigen::EigenvaluesOnly);
      const double nuclear = es.eigenvalues().cwiseAbs().sum();
      r0_ = std::min(r0_, c_id(p) / (2.0 * nuclear));
    }
  }
}

std::vector<Vec3i> DirectionSet::vectors(int j) const {
  std::vector<Vec3i> out;
  for (const auto& k : pairs_[j]) {
    out.push_back(k);
    out.push_back(-k);
  }
  return out;
}

Eigen::VectorXd DirectionSet::coefficients(const Mat3& r, int j) const { return pinv_[j] * sym_vec(r); }

Mat3 DirectionSet::coefficient_matrix(int j, int p) const {
  const auto row = pinv_[j].row(p);
  Mat3 g;
  g << row(0), row(3) / 2, row(4) / 2, row(3) / 2, row(1), row(5) / 2, row(4) / 2, row(5) / 2, row(2);
  return g;
}

DirectionSet default_direction_sets(double radius) {
  const long r2 = std::lround(radius * radius);
  if (std::abs(double(r2) - radius * radius) > 1e-9)
    throw Error(ErrorCode::BadRadius, "radius^2 must be an integer");
  for (int a = 1; a * a < r2; ++a)
    for (int b = 1; b < a; ++b)
      if (a * a + b * b == r2) {
        std::vector<Vec3i> s1{{a, b, 0}, {a, -b, 0}, {0, a, b}, {0, a, -b}, {b, 0, a}, {-b, 0, a}};
        std::vector<Vec3i> s2{{b, a, 0}, {b, -a, 0}, {0, b, a}, {0, b, -a}, {a, 0, b}, {-a, 0, b}};
        return DirectionSet(radius, s1, s2);
      }
  // Fallback: deal the +- pairs on the sphere alternately.
  std::vector<Vec3i> reps;
  const int m = static_cast<int>(std::ceil(radius));
  for (int x = -m; x <= m; ++x)
    for (int y = -m; y <= m; ++y)
      for (int z = -m; z <= m; ++z) {
        if (long(x) * x + long(y) * y + long(z) * z != r2) continue;
        const Vec3i k(x, y, z);
        bool seen = false;
        for (const auto& q : reps) seen = seen || q == -k;
        if (!seen) reps.push_back(k);
      }
  std::vector<Vec3i> s1, s2;
  for (std::size_t i = 0; i < reps.size(); ++i) (i % 2 ? s2 : s1).push_back(reps[i]);
  return DirectionSet(radius, s1, s2);
}

Eigen::VectorXd gamma_coefficients(const Mat3& r, const DirectionSet& set, int j) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (r + r.transpose()) - Mat3::Identity(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().cwiseAbs().maxCoeff() > set.r0() * (1.0 + 1e-12))
    throw Error(ErrorCode::OutsideBall, "matrix outside the admissible ball around Id");
  return set.coefficients(r, j).cwiseMax(0.0).cwiseSqrt();
}

BeltramiIdentityReport beltrami_identities(const DirectionSet& set, const GridSpec& grid, int count,
                                           std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be positive");
  const double radius = set.radius();
  BeltramiIdentityReport rep;
  rep.samples = count;
  std::vector<Vec3i> reps = set.pairs(0);
  reps.insert(reps.end(), set.pairs(1).begin(), set.pairs(1).end());
  for (int s = 0; s < count; ++s) {
    std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> nd;
    WaveCoefficients c;
    for (const Vec3i& k : reps) {
      const Complex a(nd(rng), nd(rng));
      c.push_back({k, a});
      c.push_back({-k, std::conj(a)});
    }
    const double scale = 1.0 / sup_norm(real_beltrami_flow(c, radius, grid));
    for (auto& [k, a] : c) a *= scale;
    const VectorField w = real_beltrami_flow(c, radius, grid);

    std::vector<Vec3c> amp;
    for (const auto& [k, a] : c) amp.push_back(a * make_wave(k, radius).B);
    double imag = 0.0;
    for (std::ptrdiff_t p = 0; p < grid.points(); ++p) {
      const Vec3 x = grid.position(p);
      Vec3c sum = Vec3c::Zero();
      for (std::size_t i = 0; i < c.size(); ++i) sum += amp[i] * std::exp(Complex(0.0, c[i].first.cast<double>().dot(x)));
      imag = std::max(imag, sum.imag().cwiseAbs().maxCoeff());
    }
    rep.realness = std::max(rep.realness, imag);
    rep.divergence = std::max(rep.divergence, sup_norm(divergence(w)));
    rep.curl = std::max(rep.curl, sup_norm(curl(w) - radius * w));
    ScalarField half(grid);
    half.data().col(0) = 0.5 * magnitude(w).square();
    rep.stationary = std::max(rep.stationary, sup_norm(divergence(outer_self(w)) - gradient(half)));
    Mat3 expect = Mat3::Zero();
    for (const Vec3i& k : reps) {
      const Complex a = std::find_if(c.begin(), c.end(), [&](const auto& e) { return e.first == k; })->second;
      const Vec3 kh = k.cast<double>() / radius;
      expect += std::norm(a) * (Mat3::Identity() - kh * kh.transpose());
    }
    rep.average = std::max(rep.average, (sym_vec(expect) - outer_self(w).mean()).cwiseAbs().maxCoeff());
  }
  return rep;
}

}  // namespace eulab
