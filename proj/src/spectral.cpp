// SPDX-License-Identifier: Apache-2.0
#include "eulab/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <tuple>
#include <memory>
#include <mutex>

namespace eulab {

namespace {

struct FftPlans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~FftPlans() {
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

// Plans are created once per size under the lock; fftw_execute_dft_* on new
// arrays is thread-safe afterwards.
const FftPlans& plans_for(int n) {
  static std::map<int, std::unique_ptr<FftPlans>> cache;
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto p = std::make_unique<FftPlans>();
  const std::size_t real_size = static_cast<std::size_t>(n) * n * n;
  const std::size_t cplx_size = static_cast<std::size_t>(n) * n * (n / 2 + 1);
  double* rin = fftw_alloc_real(real_size);
  fftw_complex* cout = fftw_alloc_complex(cplx_size);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p->r2c = fftw_plan_dft_r2c_3d(n, n, n, rin, cout, flags);
  p->c2r = fftw_plan_dft_c2r_3d(n, n, n, cout, rin, flags);
  fftw_free(rin);
  fftw_free(cout);
  auto& ref = *p;
  cache.emplace(n, std::move(p));
  return ref;
}

}  // namespace

std::ptrdiff_t ModeTable::row_of(int ikx, int iky, int ikz) const {
  if (ikz < 0 || ikz > n / 2) return -1;
  if (std::abs(ikx) > n / 2 || std::abs(iky) > n / 2) return -1;
  const int ix = (ikx % n + n) % n;
  const int iy = (iky % n + n) % n;
  return (static_cast<std::ptrdiff_t>(ix) * n + iy) * nz + ikz;
}

const ModeTable& mode_table(int n) {
  static std::map<int, std::unique_ptr<ModeTable>> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto t = std::make_unique<ModeTable>();
  t->n = n;
  t->nz = n / 2 + 1;
  const std::ptrdiff_t size = static_cast<std::ptrdiff_t>(n) * n * t->nz;
  t->kx.resize(size);
  t->ky.resize(size);
  t->kz.resize(size);
  t->k2.resize(size);
  t->nyquist.resize(size);
  auto signed_k = [n](int i) { return i <= n / 2 ? (i == n / 2 ? -n / 2 : i) : i - n; };
  std::ptrdiff_t r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < t->nz; ++k, ++r) {
        t->kx(r) = signed_k(i);
        t->ky(r) = signed_k(j);
        t->kz(r) = k;
        t->k2(r) = double(t->kx(r)) * t->kx(r) + double(t->ky(r)) * t->ky(r) + double(k) * k;
        t->nyquist(r) = (i == n / 2) || (j == n / 2) || (k == n / 2);
      }
  auto& ref = *t;
  cache.emplace(n, std::move(t));
  return ref;
}

namespace spectral {

Eigen::ArrayXcd forward(const Eigen::Ref<const Eigen::ArrayXd>& values, int n) {
  const auto& p = plans_for(n);
  Eigen::ArrayXd in = values;  // contiguous copy
  Eigen::ArrayXcd out(mode_table(n).size());
  fftw_execute_dft_r2c(p.r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

Eigen::ArrayXd inverse(const Eigen::Ref<const Eigen::ArrayXcd>& coeffs, int n) {
  const auto& p = plans_for(n);
  Eigen::ArrayXcd in = coeffs;  // c2r overwrites its input
  Eigen::ArrayXd out(static_cast<std::ptrdiff_t>(n) * n * n);
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  out /= static_cast<double>(out.size());
  return out;
}

Eigen::ArrayXcd resize(const Eigen::Ref<const Eigen::ArrayXcd>& coeffs, int n, int m) {
  const auto& src = mode_table(n);
  const auto& dst = mode_table(m);
  Eigen::ArrayXcd out = Eigen::ArrayXcd::Zero(dst.size());
  const double scale = std::pow(double(m) / n, 3);
  const int limit = std::min(n, m) / 2 - 1;
  for (std::ptrdiff_t r = 0; r < src.size(); ++r) {
    if (src.nyquist(r)) continue;
    if (std::abs(src.kx(r)) > limit || std::abs(src.ky(r)) > limit || src.kz(r) > limit) continue;
    out(dst.row_of(src.kx(r), src.ky(r), src.kz(r))) = coeffs(r) * scale;
  }
  return out;
}

}  // namespace spectral

namespace {

Eigen::ArrayXcd derivative_symbol(const ModeTable& t, int axis, double scale) {
  const Eigen::ArrayXi& k = axis == 0 ? t.kx : (axis == 1 ? t.ky : t.kz);
  Eigen::ArrayXcd s(t.size());
  for (std::ptrdiff_t r = 0; r < t.size(); ++r)
    s(r) = t.nyquist(r) ? Complex(0.0) : Complex(0.0, scale * k(r));
  return s;
}

const Eigen::ArrayXcd& cached_symbol(int n, int axis, double scale) {
  static std::map<std::tuple<int, int, double>, Eigen::ArrayXcd> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto key = std::make_tuple(n, axis, scale);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, derivative_symbol(mode_table(n), axis, scale)).first;
  return it->second;
}

Eigen::ArrayXcd d_axis(const Eigen::ArrayXcd& s, const GridSpec& g, int axis) {
  return s * cached_symbol(g.n, axis, g.wavenumber_scale());
}

Eigen::ArrayXd padded_values(const Eigen::ArrayXcd& s, int n, int m) {
  return spectral::inverse(spectral::resize(s, n, m), m);
}

int padded_size(int n) { return 3 * n / 2; }

}  // namespace

ScalarField partial(const ScalarField& f, int axis) {
  const auto s = spectral::forward(f.data().col(0), f.grid().n);
  ScalarField out(f.grid());
  out.data().col(0) = spectral::inverse(d_axis(s, f.grid(), axis), f.grid().n);
  return out;
}

VectorField gradient(const ScalarField& f) {
  const auto& g = f.grid();
  const auto s = spectral::forward(f.data().col(0), g.n);
  VectorField out(g);
  for (int a = 0; a < 3; ++a) out.data().col(a) = spectral::inverse(d_axis(s, g, a), g.n);
  return out;
}

ScalarField divergence(const VectorField& v) {
  const auto& g = v.grid();
  Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(mode_table(g.n).size());
  for (int a = 0; a < 3; ++a) acc += d_axis(spectral::forward(v.data().col(a), g.n), g, a);
  ScalarField out(g);
  out.data().col(0) = spectral::inverse(acc, g.n);
  return out;
}

VectorField divergence(const SymTensorField& r) {
  const auto& g = r.grid();
  std::array<Eigen::ArrayXcd, 6> s;
  for (int c = 0; c < 6; ++c) s[c] = spectral::forward(r.data().col(c), g.n);
  VectorField out(g);
  for (int i = 0; i < 3; ++i) {
    Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(mode_table(g.n).size());
    for (int j = 0; j < 3; ++j) acc += d_axis(s[sym_index(i, j)], g, j);
    out.data().col(i) = spectral::inverse(acc, g.n);
  }
  return out;
}

VectorField curl(const VectorField& v) {
  const auto& g = v.grid();
  std::array<Eigen::ArrayXcd, 3> s;
  for (int c = 0; c < 3; ++c) s[c] = spectral::forward(v.data().col(c), g.n);
  VectorField out(g);
  out.data().col(0) = spectral::inverse(d_axis(s[2], g, 1) - d_axis(s[1], g, 2), g.n);
  out.data().col(1) = spectral::inverse(d_axis(s[0], g, 2) - d_axis(s[2], g, 0), g.n);
  out.data().col(2) = spectral::inverse(d_axis(s[1], g, 0) - d_axis(s[0], g, 1), g.n);
  return out;
}

std::array<VectorField, 3> jacobian(const VectorField& v) {
  const auto& g = v.grid();
  std::array<Eigen::ArrayXcd, 3> s;
  for (int c = 0; c < 3; ++c) s[c] = spectral::forward(v.data().col(c), g.n);
  std::array<VectorField, 3> out{VectorField(g), VectorField(g), VectorField(g)};
  for (int j = 0; j < 3; ++j)
    for (int c = 0; c < 3; ++c) out[j].data().col(c) = spectral::inverse(d_axis(s[c], g, j), g.n);
  return out;
}

template <int C>
PeriodicField<C> laplacian(const PeriodicField<C>& f) {
  const auto& g = f.grid();
  const auto& t = mode_table(g.n);
  const double s2 = g.wavenumber_scale() * g.wavenumber_scale();
  Eigen::ArrayXd symbol = -s2 * t.k2;
  for (std::ptrdiff_t r = 0; r < t.size(); ++r)
    if (t.nyquist(r)) symbol(r) = 0.0;
  typename PeriodicField<C>::Data d(g.points(), C);
  for (int c = 0; c < C; ++c)
    d.col(c) = spectral::inverse(spectral::forward(f.data().col(c), g.n) * symbol, g.n);
  return PeriodicField<C>(g, std::move(d));
}

template <int C>
PeriodicField<C> truncate_nyquist(const PeriodicField<C>& f) {
  const auto& g = f.grid();
  const auto& t = mode_table(g.n);
  typename PeriodicField<C>::Data d(g.points(), C);
  for (int c = 0; c < C; ++c) {
    Eigen::ArrayXcd s = spectral::forward(f.data().col(c), g.n);
    for (std::ptrdiff_t r = 0; r < t.size(); ++r)
      if (t.nyquist(r)) s(r) = 0.0;
    d.col(c) = spectral::inverse(s, g.n);
  }
  return PeriodicField<C>(g, std::move(d));
}

template <int C>
PeriodicField<C> low_pass(const PeriodicField<C>& f, double kappa) {
  if (kappa < 0) throw Error(ErrorCode::InvalidArgument, "low_pass cutoff must be nonnegative");
  const auto& g = f.grid();
  const auto& t = mode_table(g.n);
  const double k2max = kappa * kappa;
  typename PeriodicField<C>::Data d(g.points(), C);
  for (int c = 0; c < C; ++c) {
    Eigen::ArrayXcd s = spectral::forward(f.data().col(c), g.n);
    for (std::ptrdiff_t r = 0; r < t.size(); ++r)
      if (t.k2(r) > k2max * (1.0 + 1e-14)) s(r) = 0.0;
    d.col(c) = spectral::inverse(s, g.n);
  }
  return PeriodicField<C>(g, std::move(d));
}

VectorField leray_project(const VectorField& v) {
  const auto& g = v.grid();
  const auto& t = mode_table(g.n);
  std::array<Eigen::ArrayXcd, 3> s;
  for (int c = 0; c < 3; ++c) s[c] = spectral::forward(v.data().col(c), g.n);
  for (std::ptrdiff_t r = 0; r < t.size(); ++r) {
    if (t.k2(r) == 0.0) continue;
    const double k[3] = {double(t.kx(r)), double(t.ky(r)), double(t.kz(r))};
    const Complex kf = (k[0] * s[0](r) + k[1] * s[1](r) + k[2] * s[2](r)) / t.k2(r);
    for (int c = 0; c < 3; ++c) s[c](r) -= k[c] * kf;
  }
  VectorField out(g);
  for (int c = 0; c < 3; ++c) out.data().col(c) = spectral::inverse(s[c], g.n);
  return out;
}

SymTensorField inverse_divergence(const VectorField& f) {
  const auto& g = f.grid();
  const double scale = std::max(sup_norm(f), 1e-300);
  const Vec3 m = f.mean();
  if (m.cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::NonZeroMean, "inverse_divergence needs mean-zero input");
  const auto& t = mode_table(g.n);
  std::array<Eigen::ArrayXcd, 3> s;
  for (int c = 0; c < 3; ++c) s[c] = spectral::forward(f.data().col(c), g.n);
  std::array<Eigen::ArrayXcd, 6> out;
  for (auto& o : out) o = Eigen::ArrayXcd::Zero(t.size());
  const double ws = g.wavenumber_scale();
  const Complex minus_i(0.0, -1.0);
  for (std::ptrdiff_t r = 0; r < t.size(); ++r) {
    if (t.k2(r) == 0.0 || t.nyquist(r)) continue;
    // Physical wavevector K = ws * k; |K|^2 = ws^2 k2.
    const double k[3] = {ws * t.kx(r), ws * t.ky(r), ws * t.kz(r)};
    const double kk = ws * ws * t.k2(r);
    const Complex kf = k[0] * s[0](r) + k[1] * s[1](r) + k[2] * s[2](r);
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        Complex x = k[a] * s[b](r) + s[a](r) * k[b] - 0.5 * kf * k[a] * k[b] / kk;
        if (a == b) x -= 0.5 * kf;
        out[sym_index(a, b)](r) = minus_i * x / kk;
      }
  }
  SymTensorField result(g);
  for (int c = 0; c < 6; ++c) result.data().col(c) = spectral::inverse(out[c], g.n);
  return result;
}

SymTensorField outer_self(const VectorField& a) {
  const auto& g = a.grid();
  const int m = padded_size(g.n);
  std::array<Eigen::ArrayXd, 3> pa;
  for (int c = 0; c < 3; ++c) pa[c] = padded_values(spectral::forward(a.data().col(c), g.n), g.n, m);
  SymTensorField out(g);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      Eigen::ArrayXd prod = pa[i] * pa[j];
      out.data().col(sym_index(i, j)) =
          spectral::inverse(spectral::resize(spectral::forward(prod, m), m, g.n), g.n);
    }
  return out;
}

SymTensorField symmetric_outer(const VectorField& a, const VectorField& b) {
  require_same_space(a.grid(), b.grid());
  const auto& g = a.grid();
  const int m = padded_size(g.n);
  std::array<Eigen::ArrayXd, 3> pa, pb;
  for (int c = 0; c < 3; ++c) {
    pa[c] = padded_values(spectral::forward(a.data().col(c), g.n), g.n, m);
    pb[c] = padded_values(spectral::forward(b.data().col(c), g.n), g.n, m);
  }
  SymTensorField out(g);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      Eigen::ArrayXd prod = pa[i] * pb[j] + pb[i] * pa[j];
      out.data().col(sym_index(i, j)) =
          spectral::inverse(spectral::resize(spectral::forward(prod, m), m, g.n), g.n);
    }
  return out;
}

ScalarField dealiased_product(const ScalarField& a, const ScalarField& b) {
  const auto& g = a.grid();
  const int m = padded_size(g.n);
  Eigen::ArrayXd prod = padded_values(spectral::forward(a.data().col(0), g.n), g.n, m) *
                        padded_values(spectral::forward(b.data().col(0), g.n), g.n, m);
  ScalarField out(g);
  out.data().col(0) = spectral::inverse(spectral::resize(spectral::forward(prod, m), m, g.n), g.n);
  return out;
}

VectorField advect(const VectorField& a, const VectorField& b) {
  require_same_space(a.grid(), b.grid());
  const auto& g = a.grid();
  const int m = padded_size(g.n);
  std::array<Eigen::ArrayXd, 3> pa;
  std::array<Eigen::ArrayXcd, 3> sb;
  for (int c = 0; c < 3; ++c) {
    pa[c] = padded_values(spectral::forward(a.data().col(c), g.n), g.n, m);
    sb[c] = spectral::forward(b.data().col(c), g.n);
  }
  VectorField out(g);
  for (int c = 0; c < 3; ++c) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(static_cast<std::ptrdiff_t>(m) * m * m);
    for (int j = 0; j < 3; ++j) acc += pa[j] * padded_values(d_axis(sb[c], g, j), g.n, m);
    out.data().col(c) = spectral::inverse(spectral::resize(spectral::forward(acc, m), m, g.n), g.n);
  }
  return out;
}

ScalarField pressure_solve(const VectorField& v, const SymTensorField& r, double /*nu*/) {
  require_same_space(v.grid(), r.grid());
  const auto& g = v.grid();
  const auto& t = mode_table(g.n);
  const SymTensorField x = r - outer_self(v);
  std::array<Eigen::ArrayXcd, 6> s;
  for (int c = 0; c < 6; ++c) s[c] = spectral::forward(x.data().col(c), g.n);
  Eigen::ArrayXcd p = Eigen::ArrayXcd::Zero(t.size());
  for (std::ptrdiff_t q = 0; q < t.size(); ++q) {
    if (t.k2(q) == 0.0 || t.nyquist(q)) continue;
    const double k[3] = {double(t.kx(q)), double(t.ky(q)), double(t.kz(q))};
    Complex acc = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) acc += k[a] * k[b] * s[sym_index(a, b)](q);
    p(q) = acc / t.k2(q);
  }
  ScalarField out(g);
  out.data().col(0) = spectral::inverse(p, g.n);
  return out;
}

ScalarField trace(const SymTensorField& r) {
  ScalarField out(r.grid());
  out.data().col(0) = r.data().col(0) + r.data().col(1) + r.data().col(2);
  return out;
}

SymTensorField trace_free(const SymTensorField& r) {
  SymTensorField out = r;
  const Eigen::ArrayXd third = (r.data().col(0) + r.data().col(1) + r.data().col(2)) / 3.0;
  for (int c = 0; c < 3; ++c) out.data().col(c) -= third;
  return out;
}

SymTensorField times_identity(const ScalarField& s) {
  SymTensorField out(s.grid());
  for (int c = 0; c < 3; ++c) out.data().col(c) = s.data().col(0);
  return out;
}

Eigen::ArrayXd magnitude(const VectorField& v) { return v.data().square().rowwise().sum().sqrt(); }

namespace {

template <int C>
Eigen::ArrayXd pointwise_magnitude(const PeriodicField<C>& f) {
  if constexpr (C == 1) {
    return f.data().col(0).abs();
  } else if constexpr (C == 3) {
    return magnitude(f);
  } else {
    Eigen::ArrayXd out(f.size());
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    for (std::ptrdiff_t p = 0; p < f.size(); ++p) {
      es.computeDirect(tensor_at(f, p), Eigen::EigenvaluesOnly);
      out(p) = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    return out;
  }
}

}  // namespace

template <int C>
double sup_norm(const PeriodicField<C>& f) {
  return f.size() == 0 ? 0.0 : pointwise_magnitude(f).maxCoeff();
}

template <int C>
double l2_norm(const PeriodicField<C>& f) {
  double sum = 0.0;
  if constexpr (C == 6) {
    // Frobenius: off-diagonal entries appear twice.
    sum = f.data().leftCols(3).square().sum() + 2.0 * f.data().rightCols(3).square().sum();
  } else {
    sum = f.data().square().sum();
  }
  return std::sqrt(sum * f.grid().cell_volume());
}

template <int C>
double inner(const PeriodicField<C>& a, const PeriodicField<C>& b) {
  require_same_space(a.grid(), b.grid());
  if constexpr (C == 6) {
    return ((a.data().leftCols(3) * b.data().leftCols(3)).sum() +
            2.0 * (a.data().rightCols(3) * b.data().rightCols(3)).sum()) *
           a.grid().cell_volume();
  } else {
    return (a.data() * b.data()).sum() * a.grid().cell_volume();
  }
}

template <int C>
Norms norms(const PeriodicField<C>& f) {
  Norms out;
  out.sup = sup_norm(f);
  out.l2 = l2_norm(f);
  double dmax = 0.0;
  const auto& g = f.grid();
  std::array<Spectrum<C>, 1> s{spectral::forward(f)};
  for (int axis = 0; axis < 3; ++axis) {
    typename PeriodicField<C>::Data d(g.points(), C);
    for (int c = 0; c < C; ++c) d.col(c) = spectral::inverse(d_axis(s[0].col(c), g, axis), g.n);
    dmax = std::max(dmax, sup_norm(PeriodicField<C>(g, std::move(d))));
  }
  out.c1 = out.sup + dmax;
  return out;
}

Eigen::ArrayXd time_weights(const GridSpec& grid) {
  const int nt = grid.n_t;
  const double h = grid.dt();
  Eigen::ArrayXd w(nt + 1);
  if (nt % 2 == 0) {
    for (int j = 0; j <= nt; ++j) w(j) = (j == 0 || j == nt) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    w *= h / 3.0;
  } else {
    w.setConstant(h);
    w(0) = w(nt) = 0.5 * h;
  }
  return w;
}

template <typename Field>
Norms norms(const TimeSeries<Field>& f) {
  Norms out;
  for (int j = 0; j < f.n_slices(); ++j) {
    const Norms s = norms(f[j]);
    out.sup = std::max(out.sup, s.sup);
    out.c1 = std::max(out.c1, s.c1);
  }
  out.l2 = space_time_l2(f);
  return out;
}

template <typename Field>
double space_time_l2(const TimeSeries<Field>& f) {
  const Eigen::ArrayXd w = time_weights(f.grid());
  double acc = 0.0;
  for (int j = 0; j < f.n_slices(); ++j) {
    const double s = l2_norm(f[j]);
    acc += w(j) * s * s;
  }
  return std::sqrt(acc);
}

#define EULAB_INSTANTIATE(C)                                                      \
  template PeriodicField<C> laplacian(const PeriodicField<C>&);                   \
  template PeriodicField<C> truncate_nyquist(const PeriodicField<C>&);            \
  template PeriodicField<C> low_pass(const PeriodicField<C>&, double);            \
  template Norms norms(const PeriodicField<C>&);                                  \
  template double sup_norm(const PeriodicField<C>&);                              \
  template double l2_norm(const PeriodicField<C>&);                               \
  template double inner(const PeriodicField<C>&, const PeriodicField<C>&);        \
  template Norms norms(const TimeSeries<PeriodicField<C>>&);                      \
  template double space_time_l2(const TimeSeries<PeriodicField<C>>&);

EULAB_INSTANTIATE(1)
EULAB_INSTANTIATE(3)
EULAB_INSTANTIATE(6)

#undef EULAB_INSTANTIATE

}  // namespace eulab
