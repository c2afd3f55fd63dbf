// SPDX-License-Identifier: Apache-2.0
#include "eulab/noiselab.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

#include "eulab/random.hpp"
#include "eulab/spectral.hpp"

namespace eulab {

namespace {

bool upper_half(const Vec3i& k) { return k(2) > 0 || (k(2) == 0 && (k(1) > 0 || (k(1) == 0 && k(0) > 0))); }

Mat3 projector(const Vec3& m) {
  const double m2 = m.squaredNorm();
  if (m2 == 0.0) return Mat3::Identity();
  return Mat3::Identity() - m * m.transpose() / m2;
}

std::int64_t key(const Vec3i& k) {
  return ((static_cast<std::int64_t>(k(0)) + 4096) << 26) | ((static_cast<std::int64_t>(k(1)) + 4096) << 13) |
         (static_cast<std::int64_t>(k(2)) + 4096);
}

}  // namespace

std::array<Vec3, 2> polarizations(const Vec3i& k) {
  if (k.isZero()) throw Error(ErrorCode::ZeroVector, "polarizations of the zero vector");
  const Vec3 kh = k.cast<double>().normalized();
  Vec3 e = Vec3::UnitX();
  for (int i = 0; i < 3; ++i) {
    e = Vec3::Unit(i);
    if (kh.cross(e).norm() > 1e-8) break;
  }
  const Vec3 a1 = kh.cross(e).normalized();
  return {a1, kh.cross(a1)};
}

NoiseProfile NoiseProfile::make(double nu_t, int N, double period) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "shell parameter N must be positive");
  if (!(nu_t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "nu_T must be nonnegative");
  if (!(period > 0.0)) throw Error(ErrorCode::InvalidArgument, "period must be positive");
  NoiseProfile p;
  p.nu_t = nu_t;
  p.N = N;
  p.period = period;
  const int hi = 2 * N;
  for (int x = -hi; x <= hi; ++x)
    for (int y = -hi; y <= hi; ++y)
      for (int z = 0; z <= hi; ++z) {
        const Vec3i k(x, y, z);
        const int k2 = k.squaredNorm();
        if (upper_half(k) && k2 >= N * N && k2 <= hi * hi) p.pairs.push_back(k);
      }
  // trace(1/2 sum sigma (x) sigma) = theta^2 |pairs| = 3 nu_T
  p.theta = std::sqrt(3.0 * nu_t / static_cast<double>(p.pairs.size()));
  return p;
}

std::vector<VectorField> sigma_fields(const NoiseProfile& profile, const GridSpec& grid) {
  require_same_space(grid, GridSpec{grid.n, grid.t_end, grid.n_t, profile.period});
  if (2 * profile.N > grid.max_mode())
    throw Error(ErrorCode::InvalidArgument, "grid does not resolve the noise shell");
  const double ws = profile.wavenumber_scale();
  std::vector<VectorField> out;
  out.reserve(profile.family_size());
  for (const Vec3i& k : profile.pairs) {
    const auto a = polarizations(k);
    const Vec3 kd = ws * k.cast<double>();
    for (int alpha = 0; alpha < 2; ++alpha) {
      const Vec3 amp = profile.theta * a[alpha];
      out.push_back(VectorField::from_function(grid, [&](const Vec3& x) -> Vec3 { return amp * std::cos(kd.dot(x)); }));
      out.push_back(VectorField::from_function(grid, [&](const Vec3& x) -> Vec3 { return amp * std::sin(kd.dot(x)); }));
    }
  }
  return out;
}

Mat3 quadratic_form_at(const NoiseProfile& profile, const Vec3& x) {
  const double ws = profile.wavenumber_scale();
  Mat3 s = Mat3::Zero();
  for (const Vec3i& k : profile.pairs) {
    const double th = ws * k.cast<double>().dot(x);
    const double c = std::cos(th), sn = std::sin(th);
    for (const Vec3& a : polarizations(k)) {
      const Vec3 ec = profile.theta * c * a;
      const Vec3 es = profile.theta * sn * a;
      s += 0.5 * (ec * ec.transpose() + es * es.transpose());
    }
  }
  return s;
}

SymTensorField quadratic_form(const NoiseProfile& profile, const GridSpec& grid) {
  SymTensorField out(grid);
  for (std::ptrdiff_t p = 0; p < grid.points(); ++p) set_tensor(out, p, quadratic_form_at(profile, grid.position(p)));
  return out;
}

QuadraticFormReport quadratic_form_report(const NoiseProfile& profile, const Points& samples) {
  QuadraticFormReport rep;
  // Group the pairs by |k|^2 and sum k_i k_j in integers, so symmetries of the
  // shell survive exactly instead of up to rounding.
  std::map<int, Eigen::Matrix<std::int64_t, 3, 3>> moments;
  std::map<int, std::int64_t> counts;
  for (const Vec3i& k : profile.pairs) {
    const int k2 = k.squaredNorm();
    auto [it, fresh] = moments.try_emplace(k2, Eigen::Matrix<std::int64_t, 3, 3>::Zero());
    it->second += (k.cast<std::int64_t>() * k.cast<std::int64_t>().transpose());
    ++counts[k2];
  }
  for (const auto& [k2, m] : moments)
    rep.S += 0.5 * profile.theta * profile.theta *
             (static_cast<double>(counts[k2]) * Mat3::Identity() - m.cast<double>() / static_cast<double>(k2));
  rep.trace = rep.S.trace();
  rep.c = rep.trace / 3.0;
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(rep.S - rep.c * Mat3::Identity());
  rep.anisotropy = rep.c > 0.0 ? eig.eigenvalues().cwiseAbs().maxCoeff() / rep.c : 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Mat3 d = quadratic_form_at(profile, samples.row(i).transpose().matrix()) - rep.S;
    rep.x_variation = std::max(rep.x_variation, Eigen::SelfAdjointEigenSolver<Mat3>(d).eigenvalues().cwiseAbs().maxCoeff());
  }
  return rep;
}

Mat3 corrector_symbol(const NoiseProfile& profile, const Vec3& m) {
  const double ws = profile.wavenumber_scale();
  const Mat3 pm = projector(m);
  Mat3 acc = Mat3::Zero();
  for (const Vec3i& k : profile.pairs) {
    const Vec3 kd = ws * k.cast<double>();
    const Mat3 both = projector(m + kd) + projector(m - kd);
    const auto a = polarizations(k);
    acc += (std::pow(a[0].dot(m), 2) + std::pow(a[1].dot(m), 2)) * both;
  }
  return -0.25 * profile.theta * profile.theta * pm * acc * pm;
}

VectorField corrector_apply(const VectorField& f, const NoiseProfile& profile) {
  const auto& g = f.grid();
  if (std::abs(g.period - profile.period) > 1e-12 * profile.period)
    throw Error(ErrorCode::GridMismatch, "noise profile and field use different periods");
  if (sup_norm(divergence(f)) > 1e-8 * std::max(1.0, norms(f).c1))
    throw Error(ErrorCode::NotSolenoidal, "corrector input must be divergence-free");
  const ModeTable& modes = mode_table(g.n);
  Spectrum<3> s = spectral::forward(f);
  const double tiny = 1e-14 * std::max(1e-300, s.abs().maxCoeff());
  const double ws = g.wavenumber_scale();
  for (Eigen::Index r = 0; r < modes.size(); ++r) {
    if (modes.nyquist(r) || s.row(r).abs().maxCoeff() <= tiny) {
      s.row(r).setZero();
      continue;
    }
    const Vec3 m = ws * Vec3(modes.kx(r), modes.ky(r), modes.kz(r));
    const Mat3 l = corrector_symbol(profile, m);
    const Vec3c v = s.row(r).transpose().matrix();
    s.row(r) = (l.cast<Complex>() * v).transpose().array();
  }
  return spectral::inverse(s, g);
}

EddyFit eddy_viscosity_fit(const NoiseProfile& profile, double test_kmax) {
  const double ws = profile.wavenumber_scale();
  const int kmax = static_cast<int>(std::floor(test_kmax));
  double num = 0.0, den = 0.0;
  std::vector<std::pair<Vec3, Vec3>> lf;  // (L p, |m|^2 p)
  EddyFit fit;
  for (int x = -kmax; x <= kmax; ++x)
    for (int y = -kmax; y <= kmax; ++y)
      for (int z = 0; z <= kmax; ++z) {
        const Vec3i k(x, y, z);
        if (!upper_half(k) || k.squaredNorm() > test_kmax * test_kmax) continue;
        const Vec3 m = ws * k.cast<double>();
        const Mat3 l = corrector_symbol(profile, m);
        for (const Vec3& p : polarizations(k)) {
          const Vec3 lp = l * p;
          const Vec3 lap = -m.squaredNorm() * p;
          num += lp.dot(lap);
          den += lap.squaredNorm();
          lf.emplace_back(lp, lap);
          ++fit.modes;
        }
      }
  if (den == 0.0) throw Error(ErrorCode::InvalidArgument, "empty test battery");
  fit.kappa = num / den;
  double res = 0.0, ref = 0.0;
  for (const auto& [lp, lap] : lf) {
    res += (lp - fit.kappa * lap).squaredNorm();
    ref += lp.squaredNorm();
  }
  fit.residual = ref > 0.0 ? std::sqrt(res / ref) : 0.0;
  fit.ratio = profile.nu_t > 0.0 ? fit.kappa / (0.6 * profile.nu_t) : 0.0;
  return fit;
}

namespace {

using SpMat = Eigen::SparseMatrix<Complex>;

struct Galerkin {
  std::vector<Vec3i> modes;
  std::vector<int> generation;  // scattering distance from the support of omega0
  std::unordered_map<std::int64_t, int> index;
  int find(const Vec3i& k) const {
    const auto it = index.find(key(k));
    return it == index.end() ? -1 : it->second;
  }
  void add(const Vec3i& k, int gen) {
    if (index.emplace(key(k), static_cast<int>(modes.size())).second) {
      modes.push_back(k);
      generation.push_back(gen);
    }
  }
};

}  // namespace

SdeStatistics simulate_transport_sde(const VectorField& omega0, const NoiseProfile& profile, const SdeOptions& opts) {
  const GridSpec& g = omega0.grid();
  if (!(opts.dt > 0.0) || !(opts.t_end > 0.0) || opts.n_paths < 1 || opts.record_every < 1 || opts.closure_hops < 0)
    throw Error(ErrorCode::InvalidArgument, "bad SDE options");
  if (std::abs(g.period - profile.period) > 1e-12 * profile.period)
    throw Error(ErrorCode::GridMismatch, "noise profile and field use different periods");
  if (sup_norm(divergence(omega0)) > 1e-8 * std::max(1.0, norms(omega0).c1))
    throw Error(ErrorCode::NotSolenoidal, "initial vorticity must be divergence-free");
  const double ws = g.wavenumber_scale();
  const double vol = g.volume();

  // Support of omega0 as continuum coefficients omega = sum_q c_q e^{i q.x}.
  const ModeTable& table = mode_table(g.n);
  const Spectrum<3> s0 = spectral::forward(omega0);
  const double n3 = static_cast<double>(g.points());
  const double tiny = 1e-12 * std::max(1e-300, s0.abs().maxCoeff());
  Galerkin gal;
  std::vector<std::pair<Vec3i, Vec3c>> initial;
  for (Eigen::Index r = 0; r < table.size(); ++r) {
    if (table.nyquist(r) || s0.row(r).abs().maxCoeff() <= tiny) continue;
    const Vec3i k(table.kx(r), table.ky(r), table.kz(r));
    const Vec3c c = s0.row(r).transpose().matrix() / n3;
    initial.emplace_back(k, c);
    if (k(2) > 0) initial.emplace_back(Vec3i(-k), c.conjugate());
  }
  if (initial.empty()) throw Error(ErrorCode::InvalidArgument, "initial vorticity is zero");
  for (const auto& [k, c] : initial) gal.add(k, 0);
  const int low_count = static_cast<int>(gal.modes.size());
  std::size_t frontier = 0;
  for (int h = 0; h < opts.closure_hops; ++h) {
    const std::size_t end = gal.modes.size();
    for (std::size_t i = frontier; i < end; ++i)
      for (const Vec3i& k : profile.pairs) {
        gal.add(gal.modes[i] + k, h + 1);
        gal.add(gal.modes[i] - k, h + 1);
      }
    frontier = end;
  }
  const int nm = static_cast<int>(gal.modes.size());
  const int dim = 3 * nm;

  // Noise operators B_f = -Pi(sigma_f . grad), matrix-free: per pair k a list of
  // links i -> i +- k between adjacent generations of the mode set. For the four
  // fields of a pair (alpha, cos/sin) the block (j <- i) is coef(alpha, kind) P_j.
  const Complex I(0.0, 1.0);
  struct Link {
    int src, dst;
    std::array<Complex, 4> coef;  // index 2 alpha + kind
  };
  std::vector<std::vector<Link>> links(profile.pairs.size());
  std::vector<Mat3> proj(nm);
  for (int i = 0; i < nm; ++i) proj[i] = projector(ws * gal.modes[i].cast<double>());
  std::size_t n_links = 0;
  for (std::size_t p = 0; p < profile.pairs.size(); ++p) {
    const Vec3i& k = profile.pairs[p];
    const auto a = polarizations(k);
    for (int i = 0; i < nm; ++i)
      for (int sgn : {1, -1}) {
        const int j = gal.find(gal.modes[i] + sgn * k);
        if (j < 0 || std::abs(gal.generation[i] - gal.generation[j]) != 1) continue;
        const Vec3 qsrc = ws * gal.modes[i].cast<double>();
        Link l{i, j, {}};
        for (int alpha = 0; alpha < 2; ++alpha)
          for (int kind = 0; kind < 2; ++kind) {
            const Complex cs = kind == 0 ? Complex(0.5, 0.0) : Complex(0.0, -0.5 * sgn);
            l.coef[2 * alpha + kind] = -profile.theta * cs * I * a[alpha].dot(qsrc);
          }
        links[p].push_back(l);
      }
    n_links += links[p].size();
  }

  // Drift: nu lap + 1/2 sum B_f^2 on the same links.
  std::vector<Eigen::Triplet<Complex>> drift_trip;
  for (int i = 0; i < nm; ++i) {
    const double q2 = (ws * gal.modes[i].cast<double>()).squaredNorm();
    for (int r = 0; r < 3; ++r) drift_trip.emplace_back(3 * i + r, 3 * i + r, -opts.nu * q2);
  }
  for (const auto& pl : links)
    for (const Link& first : pl)
      for (const Link& second : pl) {
        if (second.src != first.dst) continue;
        Complex c(0.0, 0.0);
        for (int f = 0; f < 4; ++f) c += 0.5 * second.coef[f] * first.coef[f];
        if (c == Complex(0.0, 0.0)) continue;
        const Mat3 m = proj[second.dst] * proj[first.dst];
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 3; ++col)
            if (m(r, col) != 0.0) drift_trip.emplace_back(3 * second.dst + r, 3 * first.src + col, c * m(r, col));
      }
  SpMat drift(dim, dim);
  drift.setFromTriplets(drift_trip.begin(), drift_trip.end());

  SdeStatistics st;
  st.modes = nm;
  st.noise_fields = profile.family_size();
  st.links = static_cast<int>(n_links);
  double drift_norm = 0.0;
  {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(dim);
    for (int c = 0; c < drift.outerSize(); ++c)
      for (SpMat::InnerIterator it(drift, c); it; ++it) rowsum(it.row()) += std::abs(it.value());
    drift_norm = rowsum.maxCoeff();
  }
  st.stability_bound = drift_norm > 0.0 ? 0.1 / drift_norm : std::numeric_limits<double>::infinity();

  Eigen::VectorXcd x0 = Eigen::VectorXcd::Zero(dim);
  for (const auto& [k, c] : initial) x0.segment<3>(3 * gal.find(k)) = c;
  double num = 0.0, den = 0.0;
  for (const auto& [k, c] : initial) {
    const Vec3 m = ws * k.cast<double>();
    const Mat3 l = corrector_symbol(profile, m);
    num += (c.adjoint() * l.cast<Complex>() * c)(0).real();
    den += m.squaredNorm() * c.squaredNorm();
  }
  st.low_mode_k2 = den / x0.squaredNorm();
  st.kappa_eff = -num / den;
  st.predicted_slope = -2.0 * (opts.nu + st.kappa_eff) * st.low_mode_k2;
  st.heat_slope = -2.0 * opts.nu * st.low_mode_k2;

  Eigen::VectorXd hweight(dim);
  for (int i = 0; i < nm; ++i) {
    const double q2 = (ws * gal.modes[i].cast<double>()).squaredNorm();
    hweight.segment<3>(3 * i).setConstant(std::pow(1.0 + q2, -opts.delta));
  }
  auto energy = [&](const Eigen::VectorXcd& x) { return vol * x.squaredNorm(); };
  auto low_energy = [&](const Eigen::VectorXcd& x) {
    double e = 0.0;
    for (int i = 0; i < low_count; ++i) e += x.segment<3>(3 * i).squaredNorm();
    return vol * e;
  };
  auto hminus = [&](const Eigen::VectorXcd& x) { return vol * (hweight.array() * x.array().abs2()).sum(); };

  const int steps = static_cast<int>(std::lround(opts.t_end / opts.dt));
  const int n_rec = steps / opts.record_every + 1;
  Eigen::MatrixXd e_all(n_rec, opts.n_paths), low_all(n_rec, opts.n_paths), h_all(n_rec, opts.n_paths);
  const double e0 = energy(x0);
  const double sq = std::sqrt(opts.dt);
  for (int path = 0; path < opts.n_paths; ++path) {
    std::mt19937_64 rng(split_seed(opts.seed, static_cast<std::uint64_t>(path)));
    std::normal_distribution<double> gauss;
    Eigen::VectorXcd x = x0;
    int rec = 0;
    for (int n = 0; n <= steps; ++n) {
      if (n % opts.record_every == 0) {
        e_all(rec, path) = energy(x);
        low_all(rec, path) = low_energy(x);
        h_all(rec, path) = hminus(x);
        if (e_all(rec, path) > 10.0 * e0)
          throw Error(ErrorCode::Unstable, "path energy exceeded 10x its initial value; reduce dt (bound " +
                                               std::to_string(st.stability_bound) + ")");
        ++rec;
      }
      if (n == steps) break;
      Eigen::VectorXcd next = x + opts.dt * (drift * x);
      if (profile.nu_t > 0.0)
        for (const auto& pl : links) {
          std::array<double, 4> xi;
          for (double& v : xi) v = sq * gauss(rng);
          for (const Link& l : pl) {
            const Complex c = xi[0] * l.coef[0] + xi[1] * l.coef[1] + xi[2] * l.coef[2] + xi[3] * l.coef[3];
            next.segment<3>(3 * l.dst) += c * (proj[l.dst].cast<Complex>() * x.segment<3>(3 * l.src));
          }
        }
      x = std::move(next);
    }
  }
  for (int r = 0; r < n_rec; ++r) {
    st.times.push_back(r * opts.record_every * opts.dt);
    const Eigen::ArrayXd e = e_all.row(r).transpose().array();
    const Eigen::ArrayXd lo = low_all.row(r).transpose().array();
    st.mean_energy.push_back(e.mean());
    st.std_energy.push_back(std::sqrt((e - e.mean()).square().mean()));
    st.mean_low_energy.push_back(lo.mean());
    st.std_low_energy.push_back(std::sqrt((lo - lo.mean()).square().mean()));
    st.mean_log_low_energy.push_back(lo.max(1e-300).log().mean());
    st.mean_hminus.push_back(h_all.row(r).mean());
    st.max_energy_ratio = std::max(st.max_energy_ratio, e.maxCoeff() / e0);
  }
  // least-squares slope of the mean log low-mode energy
  const Eigen::Map<const Eigen::ArrayXd> t(st.times.data(), n_rec);
  const Eigen::Map<const Eigen::ArrayXd> y(st.mean_log_low_energy.data(), n_rec);
  const double tm = t.mean(), ym = y.mean();
  st.fitted_slope = ((t - tm) * (y - ym)).sum() / std::max(1e-300, (t - tm).square().sum());
  return st;
}

}  // namespace eulab
