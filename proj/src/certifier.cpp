// SPDX-License-Identifier: Apache-2.0
#include "eulab/certifier.hpp"

#include <cmath>
#include <random>

#include "eulab/random.hpp"
#include "eulab/spectral.hpp"

namespace eulab {

namespace {

bool upper_half(int kx, int ky, int kz) {
  return kz > 0 || (kz == 0 && (ky > 0 || (ky == 0 && kx > 0)));
}

VectorField random_solenoidal(const GridSpec& grid, double kappa_max, std::mt19937_64& rng) {
  const ModeTable& modes = mode_table(grid.n);
  const int kmax = std::min(static_cast<int>(std::floor(kappa_max)), grid.max_mode());
  const double n3 = static_cast<double>(grid.points());
  std::normal_distribution<double> gauss;
  Spectrum<3> s = Spectrum<3>::Zero(modes.size(), 3);
  for (int kx = -kmax; kx <= kmax; ++kx)
    for (int ky = -kmax; ky <= kmax; ++ky)
      for (int kz = 0; kz <= kmax; ++kz) {
        if (!upper_half(kx, ky, kz) || kx * kx + ky * ky + kz * kz > kappa_max * kappa_max) continue;
        const Vec3 k(kx, ky, kz);
        Vec3c c;
        for (int d = 0; d < 3; ++d) c(d) = Complex(gauss(rng), gauss(rng));
        const Vec3c kc = k.cast<Complex>();
        c -= kc * (kc.dot(c) / k.squaredNorm());  // k . c = 0
        const auto row = modes.row_of(kx, ky, kz);
        for (int d = 0; d < 3; ++d) s(row, d) = c(d) * n3;
        if (kz == 0) {
          const auto mirror = modes.row_of(-kx, -ky, 0);
          for (int d = 0; d < 3; ++d) s(mirror, d) = std::conj(c(d)) * n3;
        }
      }
  return spectral::inverse(s, grid);
}

double slice_integral(const Eigen::ArrayXd& density, const GridSpec& grid) {
  return density.sum() * grid.cell_volume();
}

void check_admissible(const VectorSeries& u) {
  for (int j = 0; j < u.n_slices(); ++j) {
    const Norms nu = norms(u[j]);
    if (sup_norm(divergence(u[j])) > 1e-8 * std::max(1.0, nu.c1))
      throw Error(ErrorCode::NotSolenoidal, "candidate velocity is not divergence-free at slice " + std::to_string(j));
    if (u[j].mean().norm() > 1e-10 * std::max(1.0, nu.sup))
      throw Error(ErrorCode::NonZeroMean, "candidate velocity has nonzero mean at slice " + std::to_string(j));
  }
}

}  // namespace

VectorField TestField::value(double t) const {
  const double s = t / t_end;
  VectorField out = a + s * b;
  out *= std::pow(1.0 - s, window_power);
  return out;
}

VectorField TestField::time_derivative(double t) const {
  const double s = t / t_end;
  VectorField out = (-window_power * std::pow(1.0 - s, window_power - 1) / t_end) * (a + s * b);
  out += (std::pow(1.0 - s, window_power) / t_end) * b;
  return out;
}

double TestField::c1_norm(const GridSpec& grid) const {
  double m = 0.0;
  for (int j = 0; j <= grid.n_t; ++j)
    m = std::max(m, norms(value(grid.time(j))).c1 + sup_norm(time_derivative(grid.time(j))));
  return m;
}

TestField make_test_field(const GridSpec& grid, double kappa_max, int window_power, std::uint64_t seed) {
  if (window_power < 2) throw Error(ErrorCode::InvalidArgument, "window power must be at least 2");
  if (!(kappa_max >= 1.0)) throw Error(ErrorCode::InvalidArgument, "kappa_max must be at least 1");
  std::mt19937_64 rng(seed);
  TestField f;
  f.a = random_solenoidal(grid, kappa_max, rng);
  f.b = random_solenoidal(grid, kappa_max, rng);
  const double scale = 1.0 / std::max(sup_norm(f.a), 1e-300);
  f.a *= scale;
  f.b *= scale;
  f.window_power = window_power;
  f.t_end = grid.t_end;
  f.seed = seed;
  f.kappa_max = kappa_max;
  return f;
}

std::vector<TestField> make_battery(const GridSpec& grid, const BatterySpec& spec) {
  if (spec.count < 1) throw Error(ErrorCode::InvalidArgument, "battery must contain at least one field");
  std::vector<TestField> out;
  out.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i)
    out.push_back(make_test_field(grid, spec.kappa_max, spec.window_power, split_seed(spec.seed, i)));
  return out;
}

double weak_form(const VectorSeries& u, const TensorSeries& r, double nu, const TestField& phi,
                 bool include_initial_datum) {
  const GridSpec& g = u.grid();
  const bool has_r = r.n_slices() > 0;
  if (has_r && !(r.grid() == g)) throw Error(ErrorCode::GridMismatch, "u and R live on different grids");
  require_same_space(g, phi.a.grid());
  const Eigen::ArrayXd tw = time_weights(g);
  double total = 0.0;
  for (int j = 0; j <= g.n_t; ++j) {
    const double t = g.time(j);
    const VectorField f = phi.value(t);
    const auto grad = jacobian(f);  // grad[b](:, a) = d_b f_a
    SymTensorField m = outer_self(u[j]);
    if (has_r) m -= r[j];
    Eigen::ArrayXd density = (u[j].data() * phi.time_derivative(t).data()).rowwise().sum();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) density += m.data().col(sym_index(a, b)) * grad[b].data().col(a);
    if (nu != 0.0) density += nu * (u[j].data() * laplacian(f).data()).rowwise().sum();
    total += tw(j) * slice_integral(density, g);
  }
  if (include_initial_datum) total += slice_integral((u[0].data() * phi.value(0.0).data()).rowwise().sum(), g);
  return total;
}

namespace {

double normalized(double raw, double phi_c1, double un, double rn) {
  if (raw == 0.0) return 0.0;
  return std::abs(raw) / (phi_c1 * (un * un + un + rn));
}

}  // namespace

double weak_residual(const VectorSeries& u, const TensorSeries& r, double nu, const TestField& phi,
                     bool include_initial_datum) {
  check_admissible(u);
  const double raw = weak_form(u, r, nu, phi, include_initial_datum);
  const double rn = r.n_slices() > 0 ? space_time_l2(r) : 0.0;
  return normalized(raw, phi.c1_norm(u.grid()), space_time_l2(u), rn);
}

CertificateReport certify(const VectorSeries& u, const TensorSeries& r, double nu, const BatterySpec& spec) {
  check_admissible(u);
  const double un = space_time_l2(u);
  const double rn = r.n_slices() > 0 ? space_time_l2(r) : 0.0;
  CertificateReport rep;
  rep.threshold = spec.threshold;
  for (const TestField& phi : make_battery(u.grid(), spec)) {
    const double res =
        normalized(weak_form(u, r, nu, phi, spec.include_initial_datum), phi.c1_norm(u.grid()), un, rn);
    rep.residuals.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
    rep.mean_residual += res / spec.count;
  }
  rep.pass = rep.max_residual <= spec.threshold;
  return rep;
}

}  // namespace eulab
