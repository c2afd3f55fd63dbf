// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "eulab/spectral.hpp"

namespace eulab {

/// Plane Beltrami wave B_k exp(i k.x), an eigenfunction of curl with eigenvalue |k|.
struct BeltramiWave {
  Vec3i k = Vec3i::Zero();
  double radius = 0.0;
  Vec3 A = Vec3::Zero();    // real, A.k = 0, |A| = 1/sqrt(2), A_{-k} = A_k
  Vec3c B = Vec3c::Zero();  // A + i (k/|k|) x A

  Vec3 unit() const { return k.cast<double>() / radius; }
};

/// Canonical wave: A = normalize(k x e)/sqrt(2), e the first basis vector not
/// parallel to k, sign chosen so the first nonzero entry of A is positive.
/// Throws ZeroVector for k = 0 and BadRadius when |k| != radius.
BeltramiWave make_wave(const Vec3i& k, double radius);

using WaveCoefficients = std::vector<std::pair<Vec3i, Complex>>;

/// W = sum_k a_k B_k exp(i k.x) sampled on the grid. All k must lie on the
/// sphere |k| = radius and satisfy a_{-k} = conj(a_k) (missing entries count
/// as zero); otherwise ConjugationViolated / BadRadius.
VectorField real_beltrami_flow(const WaveCoefficients& coeffs, double radius, const GridSpec& grid);

/// Two disjoint symmetric sets of integer vectors on |k| = radius together with
/// the linear decomposition R = sum_p c_p(R) (Id - k_p^ (x) k_p^) over +- pairs.
///
/// Each set is stored by one representative per +- pair. c(R) = M^+ vec(R) is
/// affine in R; gamma_p = sqrt(c_p). The admissible radius r0 is the largest r
/// with c_p(R) >= c_p(Id)/2 on the whole operator-norm ball ||R - Id|| <= r:
/// r0 = min_p c_p(Id) / (2 ||G_p||_*), G_p the matrix form of row p of M^+ and
/// ||.||_* the nuclear norm (dual of the operator norm).
class DirectionSet {
 public:
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  DirectionSet(double radius, std::vector<Vec3i> set1, std::vector<Vec3i> set2);

  double radius() const { return radius_; }
  double r0() const { return r0_; }
  const std::vector<Vec3i>& pairs(int j) const { return pairs_[j]; }
  /// Every vector of set j (both signs), pair p at positions 2p and 2p+1.
  std::vector<Vec3i> vectors(int j) const;
  const Eigen::MatrixXd& matrix(int j) const { return m_[j]; }
  const Eigen::MatrixXd& pseudo_inverse(int j) const { return pinv_[j]; }

  /// Linear coefficients c_p(R), no ball check.
  Eigen::VectorXd coefficients(const Mat3& r, int j) const;
  /// Matrix G_p with c_p(R) = <G_p, R>_F.
  Mat3 coefficient_matrix(int j, int p) const;

 private:
  double radius_ = 0.0;
  std::array<std::vector<Vec3i>, 2> pairs_;
  std::array<Eigen::MatrixXd, 2> m_, pinv_;
  double r0_ = 0.0;
};

/// Symmetric 3x3 matrix as (xx, yy, zz, xy, xz, yz).
DirectionSet::Vec6 sym_vec(const Mat3& r);

/// Sets on the sphere of the given radius. For a hypotenuse radius (a^2 + b^2 =
/// radius^2, a > b > 0) the two sets are the two cyclic orientations of
/// {(a,b,0), (a,-b,0), (0,a,b), (0,a,-b), (b,0,a), (-b,0,a)}; otherwise the
/// +- pairs on the sphere are dealt alternately. Throws RankDeficient when a set
/// does not span the symmetric matrices.
DirectionSet default_direction_sets(double radius = 5.0);

/// gamma_p(R) = sqrt(c_p(R)) per +- pair of set j. Throws OutsideBall when
/// ||R - Id||_op > r0.
Eigen::VectorXd gamma_coefficients(const Mat3& r, const DirectionSet& set, int j);

/// Worst errors of the Beltrami identities over random conjugate-symmetric
/// coefficient sets on both direction sets, each flow scaled to unit sup norm.
struct BeltramiIdentityReport {
  int samples = 0;
  double realness = 0.0;    // max |Im sum a_k B_k e^{ik.x}| by direct summation
  double divergence = 0.0;  // sup |div W|
  double curl = 0.0;        // sup |curl W - radius W|
  double stationary = 0.0;  // sup |div(W (x) W) - grad(|W|^2 / 2)|
  double average = 0.0;     // max entry of <W (x) W> - sum_pairs |a_k|^2 (Id - k^ (x) k^)
};

BeltramiIdentityReport beltrami_identities(const DirectionSet& set, const GridSpec& grid, int count,
                                           std::uint64_t seed);

}  // namespace eulab
