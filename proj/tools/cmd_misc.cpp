// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <iostream>

#include "commands.hpp"
#include "eulab/beltrami.hpp"
#include "eulab/convexint.hpp"
#include "eulab/io.hpp"
#include "eulab/multiscale.hpp"
#include "eulab/noiselab.hpp"
#include "rundir.hpp"

namespace eulab::cli {

std::string describe_ladder_family(const std::string& command);

namespace {

std::vector<Key> quadform_keys() {
  return {{"nu_t", "1", "eddy-viscosity intensity nu_T"},
          {"N", "4,8", "shell parameters (comma list)"},
          {"grid.n", "16", "grid on which S(x) is sampled"},
          {"tol_constant", "1e-12", "PASS when max_x ||S(x) - S|| is at most this"}};
}

std::vector<Key> corrector_keys() {
  return {{"nu_t", "1", "eddy-viscosity intensity nu_T"},
          {"N", "2,4,8,16", "shell parameters (comma list)"},
          {"test_kmax", "2", "battery of Fourier modes 0 < |m| <= test_kmax"},
          {"ratio_low", "0.7", "PASS band for kappa / (0.6 nu_T)"},
          {"ratio_high", "1.3", "PASS band for kappa / (0.6 nu_T)"}};
}

std::vector<Key> simulate_keys() {
  const SdeOptions o;
  return {{"seed", "1", "master seed; path i uses split_seed(seed, i)"},
          {"nu", "0.1", "molecular viscosity"},
          {"nu_t", "1", "eddy-viscosity intensity nu_T"},
          {"N", "4", "shell parameter"},
          {"grid.n", "16", "grid of the initial field"},
          {"k0", "1,0,0", "wavevector of the single-mode initial vorticity"},
          {"dt", format_number(o.dt), "Euler-Maruyama step"},
          {"t_end", "1", "horizon"},
          {"paths", std::to_string(o.n_paths), "number of paths"},
          {"delta", format_number(o.delta), "H^-delta exponent"},
          {"record_every", std::to_string(o.record_every), "steps between recorded times"},
          {"closure_hops", std::to_string(o.closure_hops), "scattering generations in the mode set"},
          {"slope_tol", "0.25", "relative tolerance of the fitted decay slope"},
          {"heat_tol", "0.01", "relative tolerance of the heat decay when nu_t = 0"}};
}

std::vector<Key> beltrami_keys() {
  return {{"seed", "1", "master seed"},
          {"count", "50", "random coefficient sets"},
          {"grid.n", "32", "grid size"},
          {"radius", "5", "lambda_bar"},
          {"tol_linear", "1e-12", "tolerance for realness, divergence and curl"},
          {"tol_quadratic", "1e-10", "tolerance for the stationary and average identities"}};
}

GridSpec grid_from(const Config& cfg) {
  GridSpec g;
  g.n = cfg.integer("grid.n");
  try {
    g.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return g;
}

NoiseProfile profile_or_usage(double nu_t, int n) {
  try {
    return NoiseProfile::make(nu_t, n);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int noise_quadform(const Options& opts) {
  const Config cfg = load_config(quadform_keys(), opts);
  const GridSpec g = grid_from(cfg);
  const double tol = cfg.num("tol_constant");
  RunDir dir(opts.out);
  dir.set_config(cfg.resolved());
  Csv csv(dir.path("quadform.csv"), {"N", "nu_t", "pairs", "trace", "c", "anisotropy", "x_variation", "S_xx", "S_yy",
                                     "S_zz", "S_xy", "S_xz", "S_yz"});
  bool pass = true;
  for (int n : cfg.int_list("N")) {
    const NoiseProfile p = profile_or_usage(cfg.num("nu_t"), n);
    const auto rep = quadratic_form_report(p, grid_points(g));
    csv << n << p.nu_t << static_cast<int>(p.pairs.size()) << rep.trace << rep.c << rep.anisotropy << rep.x_variation;
    for (int r = 0; r < 3; ++r) csv << rep.S(r, r);
    csv << rep.S(0, 1) << rep.S(0, 2) << rep.S(1, 2);
    csv.end_row();
    pass = pass && rep.x_variation <= tol;
    std::printf("N=%d pairs=%zu trace=%.15g anisotropy=%.3e x-variation=%.3e\n", n, p.pairs.size(), rep.trace,
                rep.anisotropy, rep.x_variation);
  }
  csv.close();
  dir.track("quadform.csv");
  dir.mark("quadform");
  dir.write_manifest(pass ? "PASS" : "FAIL");
  return pass ? kPass : kFail;
}

int noise_corrector(const Options& opts) {
  const Config cfg = load_config(corrector_keys(), opts);
  const double lo = cfg.num("ratio_low"), hi = cfg.num("ratio_high");
  RunDir dir(opts.out);
  dir.set_config(cfg.resolved());
  Csv csv(dir.path("eddy.csv"), {"N", "nu_t", "kappa", "ratio", "residual", "modes"});
  bool pass = true;
  for (int n : cfg.int_list("N")) {
    const NoiseProfile p = profile_or_usage(cfg.num("nu_t"), n);
    const EddyFit f = eddy_viscosity_fit(p, cfg.num("test_kmax"));
    csv << n << p.nu_t << f.kappa << f.ratio << f.residual << f.modes;
    csv.end_row();
    if (p.nu_t > 0.0) pass = pass && f.ratio >= lo && f.ratio <= hi;
    std::printf("N=%d kappa=%.10g ratio=%.6f residual=%.3e\n", n, f.kappa, f.ratio, f.residual);
  }
  csv.close();
  dir.track("eddy.csv");
  dir.mark("corrector");
  dir.write_manifest(pass ? "PASS" : "FAIL");
  return pass ? kPass : kFail;
}

int noise_simulate(const Options& opts) {
  const Config cfg = load_config(simulate_keys(), opts);
  const GridSpec g = grid_from(cfg);
  const NoiseProfile p = profile_or_usage(cfg.num("nu_t"), cfg.integer("N"));
  SdeOptions o;
  o.nu = cfg.num("nu");
  o.dt = cfg.num("dt");
  o.t_end = cfg.num("t_end");
  o.n_paths = cfg.integer("paths");
  o.seed = cfg.u64("seed");
  o.delta = cfg.num("delta");
  o.record_every = cfg.integer("record_every");
  o.closure_hops = cfg.integer("closure_hops");
  const Vec3i k0 = cfg.vec3i("k0");
  if (k0.isZero()) throw UsageError("k0 must be nonzero");
  const Vec3 a = polarizations(k0)[0];
  const Vec3 kd = k0.cast<double>();
  const VectorField omega0 = VectorField::from_function(g, [&](const Vec3& x) -> Vec3 { return a * std::cos(kd.dot(x)); });

  RunDir dir(opts.out);
  dir.set_config(cfg.resolved());
  SdeStatistics st;
  try {
    st = simulate_transport_sde(omega0, p, o);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw UsageError(e.what());
    dir.results()["error"] = e.what();
    dir.write_manifest("FAIL");
    std::cerr << "noise simulate: " << e.what() << '\n';
    return kFail;
  }
  dir.mark("simulate");
  {
    Csv csv(dir.path("sde.csv"), {"time", "mean_energy", "std_energy", "mean_low_energy", "std_low_energy",
                                  "mean_log_low_energy", "mean_hminus"});
    for (std::size_t i = 0; i < st.times.size(); ++i) {
      csv << st.times[i] << st.mean_energy[i] << st.std_energy[i] << st.mean_low_energy[i] << st.std_low_energy[i]
          << st.mean_log_low_energy[i] << st.mean_hminus[i];
      csv.end_row();
    }
  }
  dir.track("sde.csv");
  const bool heat = p.nu_t == 0.0;
  const double target = heat ? st.heat_slope : st.predicted_slope;
  const double tol = heat ? cfg.num("heat_tol") : cfg.num("slope_tol");
  const bool pass = std::abs(st.fitted_slope - target) <= tol * std::abs(target);
  auto& res = dir.results();
  res["modes"] = st.modes;
  res["noise_fields"] = st.noise_fields;
  res["links"] = st.links;
  res["stability_bound"] = st.stability_bound;
  res["kappa_eff"] = st.kappa_eff;
  res["predicted_slope"] = st.predicted_slope;
  res["heat_slope"] = st.heat_slope;
  res["fitted_slope"] = st.fitted_slope;
  res["max_energy_ratio"] = st.max_energy_ratio;
  dir.write_manifest(pass ? "PASS" : "FAIL");
  std::printf("modes=%d links=%d kappa_eff=%.6g fitted slope %.6g, target %.6g (%s): %s\n", st.modes, st.links,
              st.kappa_eff, st.fitted_slope, target, heat ? "heat" : "eddy", pass ? "PASS" : "FAIL");
  return pass ? kPass : kFail;
}

int multiscale_reynolds(const Options& opts) {
  if (opts.in.empty() || opts.out.empty()) throw UsageError("multiscale reynolds needs --in STEM and --out STEM");
  if (!(opts.kappa > 0.0)) throw UsageError("--kappa must be positive");
  try {
    if (io::read_header(opts.in).shape.size() == 5) {
      const VectorSeries u = io::read_series<VectorField>(opts.in);
      TensorSeries r(u.grid());
      for (int j = 0; j < u.n_slices(); ++j) r[j] = reynolds_stress(u[j], opts.kappa);
      const auto h = io::write_dump(opts.out, r);
      std::printf("%d slices, ||R||_C0 = %.10g; wrote %s.bin (sha256 %s)\n", u.n_slices(), c0_norm(r),
                  opts.out.c_str(), h.checksum.c_str());
      return kPass;
    }
    const VectorField u = io::read_field<3>(opts.in);
    const SymTensorField r = reynolds_stress(u, opts.kappa);
    const auto h = io::write_dump(opts.out, r);
    std::printf("||R||_C0 = %.10g, ||R||_L2 = %.10g; wrote %s.bin (sha256 %s)\n", sup_norm(r), l2_norm(r),
                opts.out.c_str(), h.checksum.c_str());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw UsageError(e.what());
    throw;
  }
  return kPass;
}

int beltrami_verify(const Options& opts) {
  const Config cfg = load_config(beltrami_keys(), opts);
  const GridSpec g = grid_from(cfg);
  const double radius = cfg.num("radius");
  DirectionSet set = [&] {
    try {
      return default_direction_sets(radius);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();
  if (2 * radius > g.max_mode()) throw UsageError("grid.n does not resolve the products of the waves");
  const auto rep = beltrami_identities(set, g, cfg.integer("count"), cfg.u64("seed"));
  const double tl = cfg.num("tol_linear"), tq = cfg.num("tol_quadratic");
  const bool pass = rep.realness <= tl && rep.divergence <= tl && rep.curl <= tl && rep.stationary <= tq &&
                    rep.average <= tq;
  std::printf("%d coefficient sets on both direction sets (radius %g, r0 = %.6g)\n", rep.samples, radius, set.r0());
  std::printf("  realness    %.3e\n  divergence  %.3e\n  curl        %.3e\n  stationary  %.3e\n  average     %.3e\n",
              rep.realness, rep.divergence, rep.curl, rep.stationary, rep.average);
  std::printf("verdict %s\n", pass ? "PASS" : "FAIL");
  if (!opts.out.empty()) {
    RunDir dir(opts.out);
    dir.set_config(cfg.resolved());
    dir.results() = {{"realness", rep.realness},     {"divergence", rep.divergence}, {"curl", rep.curl},
                     {"stationary", rep.stationary}, {"average", rep.average},       {"r0", set.r0()}};
    dir.mark("verify");
    dir.write_manifest(pass ? "PASS" : "FAIL");
  }
  return pass ? kPass : kFail;
}

std::string describe_keys(const std::string& command) {
  if (command == "noise quadform") return Config(quadform_keys()).describe();
  if (command == "noise corrector") return Config(corrector_keys()).describe();
  if (command == "noise simulate") return Config(simulate_keys()).describe();
  if (command == "beltrami verify") return Config(beltrami_keys()).describe();
  return describe_ladder_family(command);
}

}  // namespace eulab::cli
