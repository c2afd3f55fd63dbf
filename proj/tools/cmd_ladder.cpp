// SPDX-License-Identifier: Apache-2.0
// ci run / ci verify / ensemble run / certify.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "commands.hpp"
#include "eulab/certifier.hpp"
#include "eulab/io.hpp"
#include "eulab/stochastic.hpp"
#include "rundir.hpp"

namespace eulab::cli {

namespace fs = std::filesystem;

Config load_config(std::vector<Key> schema, const Options& opts) {
  Config cfg(std::move(schema));
  if (!opts.config.empty()) cfg.load_file(opts.config);
  for (const std::string& kv : opts.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::vector<Key> ladder_keys() {
  const Schedule s;
  const LadderConfig l;
  auto num = [](double v) { return format_number(v); };
  return {
      {"seed", "1", "master seed; every stream is split_seed(seed, index)"},
      {"threads", std::to_string(std::max(1u, std::thread::hardware_concurrency())),
       "worker-pool size (recorded; results do not depend on it)"},
      {"grid.n", "32", "spatial points per axis (power of two)"},
      {"grid.n_t", "64", "time intervals"},
      {"grid.t_end", "1", "time horizon T"},
      {"stages", "3", "number of stages q = 0 .. stages - 1"},
      {"schedule.a", num(s.a), "frequency growth parameter"},
      {"schedule.c0", num(s.c0), "amplitude constant in delta_q"},
      {"schedule.frequency_mode", "geometric", "geometric or double_exponential"},
      {"schedule.lambda0", num(s.lambda0), "lambda_0"},
      {"schedule.lambda_bar", num(s.lambda_bar), "radius of the direction sets"},
      {"schedule.mu_constant", num(s.mu_constant), "mu_q = delta_q^{1/2} lambda_q / mu_constant before rounding"},
      {"schedule.min_cells", num(s.min_cells), "lower bound on mu_q T"},
      {"schedule.eps1", num(s.eps1), "cutoff transition exponent"},
      {"schedule.onset_fraction", num(s.onset_fraction), "t0 / T"},
      {"schedule.mollify_factor", num(s.mollify_factor), "mollification cutoff over lambda_q"},
      {"tol_er", num(l.tol_er), "Euler-Reynolds residual tolerance per stage"},
      {"flow.method", "spectral", "spectral or characteristics"},
      {"pullback_upsample", std::to_string(l.pullback_upsample), "upsampling of pullback interpolation"},
      {"strict", "false", "degenerate Reynolds stress is an error"},
  };
}

std::pair<LadderConfig, int> ladder_config(const Config& cfg) {
  LadderConfig l;
  l.grid.n = cfg.integer("grid.n");
  l.grid.n_t = cfg.integer("grid.n_t");
  l.grid.t_end = cfg.num("grid.t_end");
  Schedule& s = l.schedule;
  s.a = cfg.num("schedule.a");
  s.c0 = cfg.num("schedule.c0");
  const std::string mode = cfg.str("schedule.frequency_mode");
  if (mode == "geometric")
    s.mode = FrequencyMode::Geometric;
  else if (mode == "double_exponential")
    s.mode = FrequencyMode::DoubleExponential;
  else
    throw UsageError("schedule.frequency_mode must be geometric or double_exponential");
  s.lambda0 = cfg.num("schedule.lambda0");
  s.lambda_bar = cfg.num("schedule.lambda_bar");
  s.mu_constant = cfg.num("schedule.mu_constant");
  s.min_cells = cfg.num("schedule.min_cells");
  s.eps1 = cfg.num("schedule.eps1");
  s.onset_fraction = cfg.num("schedule.onset_fraction");
  s.mollify_factor = cfg.num("schedule.mollify_factor");
  l.tol_er = cfg.num("tol_er");
  const std::string method = cfg.str("flow.method");
  if (method == "spectral")
    l.flow.method = FlowMethod::Spectral;
  else if (method == "characteristics")
    l.flow.method = FlowMethod::Characteristics;
  else
    throw UsageError("flow.method must be spectral or characteristics");
  l.pullback_upsample = cfg.integer("pullback_upsample");
  l.strict = cfg.flag("strict");
  const int stages = cfg.integer("stages");
  if (stages < 1) throw UsageError("stages must be at least 1");
  if (cfg.integer("threads") < 1) throw UsageError("threads must be positive");
  try {
    l.grid.validate();
    s.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return {l, stages - 1};
}

namespace {

std::vector<Key> ci_keys() {
  auto keys = ladder_keys();
  keys.push_back({"estimate_bound", "10", "bound for the estimate ratios a1, a2, a3"});
  keys.push_back({"require_estimates", "false", "make the estimate ratios part of the verdict"});
  keys.push_back({"dump_fields", "true", "write v, p, R of every stage"});
  return keys;
}

std::vector<Key> ensemble_keys() {
  auto keys = ladder_keys();
  keys.push_back({"ensemble.law", "two_point(1,0.25)", "uniform01, two_point(a1,a2[,p]) or dirac(a)"});
  keys.push_back({"ensemble.size", "8", "number of members"});
  keys.push_back({"ensemble.stage", "0", "first recorded stage q"});
  keys.push_back({"ensemble.tol_sep_rel", "1e-6", "cluster separation relative to the largest member norm"});
  return keys;
}

std::vector<Key> certify_keys() {
  const BatterySpec b;
  return {
      {"run", "", "run directory of ci run (alternative to u / r)"},
      {"stage", "-1", "stage in the run directory (-1: last)"},
      {"u", "", "velocity series dump stem"},
      {"r", "", "stress series dump stem (empty: R = 0)"},
      {"nu", "0", "viscosity"},
      {"battery.count", std::to_string(b.count), "number of test fields"},
      {"battery.kappa_max", format_number(b.kappa_max), "test-field band limit"},
      {"battery.window_power", std::to_string(b.window_power), "time window exponent"},
      {"battery.seed", std::to_string(b.seed), "battery seed"},
      {"battery.include_initial_datum", "false", "add the int u(0).phi(0) term"},
      {"threshold", format_number(b.threshold), "PASS when every normalized residual is at most this"},
  };
}

std::string stage_stem(int q, char what) { return "fields/stage" + std::to_string(q) + "_" + what; }

double energy_onset(const Eigen::ArrayXd& e, const GridSpec& g) {
  const double floor = 1e-24 * std::max(1e-300, e.maxCoeff());
  int j = 0;
  while (j < e.size() && e(j) <= floor) ++j;
  return j == 0 ? 0.0 : g.time(j - 1);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

nlohmann::ordered_json read_manifest(const fs::path& run) {
  std::ifstream in(run / "manifest.json");
  if (!in) throw UsageError("no manifest.json in " + run.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace

int ci_run(const Options& opts) {
  const Config cfg = load_config(ci_keys(), opts);
  const auto [lc, q_max] = ladder_config(cfg);
  const double bound = cfg.num("estimate_bound");
  RunDir dir(opts.out);
  dir.set_config(cfg.resolved());

  std::vector<IterationState> states;
  try {
    states = run(lc, q_max);
  } catch (const Error& e) {
    dir.mark("ladder");
    dir.results()["error"] = e.what();
    dir.write_manifest("FAIL");
    std::cerr << "ci run: " << e.what() << '\n';
    return kFail;
  }
  dir.mark("ladder");

  const EstimateReport est = check_estimates(states, lc.schedule, bound);
  {
    Csv csv(dir.path("diagnostics.csv"),
            {"stage", "lambda", "delta", "delta_next", "r_c0", "er_residual", "a1", "a2", "a3", "w_c0", "w_c1", "mu",
             "wave_frequency", "leray_displacement", "cauchy", "v0_sup", "energy_onset", "active_slabs",
             "degenerate_slabs"});
    for (const IterationState& s : states) {
      const auto& d = s.diag;
      const auto& row = est.rows[s.q];
      csv << s.q << lc.schedule.lambda(s.q) << lc.schedule.delta(s.q) << lc.schedule.delta(s.q + 1) << d.r_c0
          << d.er_residual;
      if (s.q < q_max)
        csv << row.a1 << row.a2;
      else
        csv.blank().blank();
      csv << row.a3 << d.w_c0 << d.w_c1 << d.mu << d.wave_frequency << d.leray_displacement << d.cauchy
          << sup_norm(s.v[0]) << energy_onset(energy_profile(s.v), lc.grid) << d.active_slabs << d.degenerate_slabs;
      csv.end_row();
    }
  }
  dir.track("diagnostics.csv");
  {
    Csv csv(dir.path("energy.csv"), {"stage", "t", "energy"});
    for (const IterationState& s : states) {
      const Eigen::ArrayXd e = energy_profile(s.v);
      for (int j = 0; j < e.size(); ++j) {
        csv << s.q << lc.grid.time(j) << e(j);
        csv.end_row();
      }
    }
  }
  dir.track("energy.csv");
  dir.mark("diagnostics");

  if (cfg.flag("dump_fields")) {
    for (const IterationState& s : states) {
      io::write_dump(dir.path(stage_stem(s.q, 'v')), s.v);
      io::write_dump(dir.path(stage_stem(s.q, 'p')), s.p);
      io::write_dump(dir.path(stage_stem(s.q, 'r')), s.r);
      for (char c : {'v', 'p', 'r'}) dir.track_dump(stage_stem(s.q, c));
    }
    dir.mark("dumps");
  }

  bool v0_zero = true, r_decreasing = true;
  double worst_residual = 0.0;
  for (const IterationState& s : states) {
    v0_zero = v0_zero && sup_norm(s.v[0]) <= 1e-12;
    worst_residual = std::max(worst_residual, s.diag.er_residual);
    if (s.q > 0) r_decreasing = r_decreasing && s.diag.r_c0 < states[s.q - 1].diag.r_c0;
  }
  auto& res = dir.results();
  res["stages"] = static_cast<int>(states.size());
  res["max_er_residual"] = worst_residual;
  res["v0_zero"] = v0_zero;
  res["r_strictly_decreasing"] = r_decreasing;
  res["estimates_pass"] = est.pass;
  res["lambda_bar"] = lc.schedule.lambda_bar;
  res["onset_time"] = lc.onset();
  const bool pass = worst_residual <= lc.tol_er && v0_zero && (!cfg.flag("require_estimates") || est.pass);
  dir.write_manifest(pass ? "PASS" : "FAIL");

  std::cout << "stage  ||R||_C0        ER residual    a1          a2          a3\n";
  for (const IterationState& s : states) {
    const auto& row = est.rows[s.q];
    if (s.q < q_max)
      std::printf("%5d  %-14.6g  %-13.3e  %-10.4g  %-10.4g  %-10.4g\n", s.q, s.diag.r_c0, s.diag.er_residual, row.a1,
                  row.a2, row.a3);
    else
      std::printf("%5d  %-14.6g  %-13.3e  %-10s  %-10s  %-10.4g\n", s.q, s.diag.r_c0, s.diag.er_residual, "-", "-",
                  row.a3);
  }
  std::cout << "estimates " << (est.pass ? "within" : "exceed") << " bound " << bound << "; verdict "
            << (pass ? "PASS" : "FAIL") << " -> " << dir.root().string() << '\n';
  return pass ? kPass : kFail;
}

int ci_verify(const Options& opts) {
  if (opts.run.empty()) throw UsageError("ci verify needs --run DIR");
  const fs::path run = opts.run;
  const auto manifest = read_manifest(run);
  bool ok = true;
  int checked = 0;
  for (const auto& [rel, sum] : manifest.at("checksums").items()) {
    const fs::path p = run / rel;
    if (!fs::exists(p)) {
      std::cout << "missing   " << rel << '\n';
      ok = false;
      continue;
    }
    if (io::sha256_file(p) != sum.get<std::string>()) {
      std::cout << "modified  " << rel << '\n';
      ok = false;
    }
    ++checked;
  }
  std::cout << "checksums: " << checked << " files checked\n";

  const auto rows = read_csv(run / "diagnostics.csv");
  if (rows.size() < 2) throw UsageError("diagnostics.csv has no rows");
  const auto& header = rows.front();
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw UsageError("diagnostics.csv lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_stage = col("stage"), c_r = col("r_c0"), c_res = col("er_residual"), c_v0 = col("v0_sup");
  const double tol_er = std::stod(manifest.at("config").at("tol_er").get<std::string>());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const int q = std::stoi(rows[i][c_stage]);
    const fs::path v_stem = run / stage_stem(q, 'v');
    if (!fs::exists(v_stem.string() + ".json")) continue;
    const VectorSeries v = io::read_series<VectorField>(v_stem);
    const ScalarSeries p = io::read_series<ScalarField>(run / stage_stem(q, 'p'));
    const TensorSeries r = io::read_series<SymTensorField>(run / stage_stem(q, 'r'));
    const double residual = residual_ER(v, p, r);
    const double r_c0 = c0_norm(r);
    const double rec_res = std::stod(rows[i][c_res]), rec_r = std::stod(rows[i][c_r]);
    const bool same = std::abs(residual - rec_res) <= 1e-9 * rec_res + 1e-300 &&
                      std::abs(r_c0 - rec_r) <= 1e-12 * rec_r + 1e-300;
    const bool stage_ok = same && residual <= tol_er && sup_norm(v[0]) <= 1e-12 && std::stod(rows[i][c_v0]) <= 1e-12;
    std::printf("stage %d: residual %.3e (recorded %.3e), ||R||_C0 %.6g (recorded %.6g) %s\n", q, residual, rec_res,
                r_c0, rec_r, stage_ok ? "ok" : "MISMATCH");
    ok = ok && stage_ok;
  }
  std::cout << "verdict " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kPass : kFail;
}

int ensemble_run(const Options& opts) {
  const Config cfg = load_config(ensemble_keys(), opts);
  const auto [lc, q_max] = ladder_config(cfg);
  AlphaDistribution law;
  try {
    law = AlphaDistribution::parse(cfg.str("ensemble.law"));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const int size = cfg.integer("ensemble.size");
  const int q = cfg.integer("ensemble.stage");
  if (size < 1) throw UsageError("ensemble.size must be positive");
  if (q < 0 || q > q_max) throw UsageError("ensemble.stage must lie in 0 .. stages - 1");
  RunDir dir(opts.out);
  dir.set_config(cfg.resolved());

  std::vector<IterationState> states;
  Ensemble ens;
  try {
    states = run(lc, q_max);
    dir.mark("ladder");
    ens = sample_ensemble(states, q, law, size, cfg.u64("seed"));
  } catch (const Error& e) {
    dir.results()["error"] = e.what();
    dir.write_manifest("FAIL");
    std::cerr << "ensemble run: " << e.what() << '\n';
    return kFail;
  }
  dir.mark("ensemble");

  std::vector<std::string> member_cols{"member"};
  for (int i = 0; i < size; ++i) member_cols.push_back("m" + std::to_string(i));
  for (int p = ens.q_first; p <= ens.q_last; ++p) {
    const int idx = p - ens.q_first;
    for (const auto& [name, m] : {std::pair{std::string("distances"), &ens.within[idx]},
                                  std::pair{std::string("cross"), &ens.cross[idx]}}) {
      const std::string rel = name + "_stage" + std::to_string(p) + ".csv";
      Csv csv(dir.path(rel), member_cols);
      for (int i = 0; i < size; ++i) {
        csv << i;
        for (int k = 0; k < size; ++k) csv << (*m)(i, k);
        csv.end_row();
      }
      dir.track(rel);
    }
  }
  const std::vector<double> law_dist = law_convergence(ens);
  {
    Csv csv(dir.path("law_convergence.csv"), {"stage", "energy_distance"});
    for (std::size_t i = 0; i < law_dist.size(); ++i) {
      csv << ens.q_first + static_cast<int>(i) << law_dist[i];
      csv.end_row();
    }
  }
  dir.track("law_convergence.csv");

  double largest = 0.0;
  for (const auto& n : ens.path_norms) largest = std::max(largest, n.maxCoeff());
  const SupportReport sup = support_diagnostic(ens, cfg.num("ensemble.tol_sep_rel") * largest);
  {
    Csv csv(dir.path("paths.csv"), {"member", "alpha", "t", "l2_norm"});
    fs::create_directories(dir.path("members"));
    for (int i = 0; i < size; ++i) {
      const AlphaSample m = ensemble_member(states, ens, i, ens.q_last);
      for (int j = 0; j < m.v.n_slices(); ++j) {
        csv << i << ens.alphas[i] << lc.grid.time(j) << l2_norm(m.v[j]);
        csv.end_row();
      }
      nlohmann::ordered_json member = {{"index", i},
                                       {"alpha", ens.alphas[i]},
                                       {"stream", i},
                                       {"cluster", sup.labels[i]},
                                       {"initial_norm", ens.initial_norms[i]}};
      std::vector<double> norms;
      for (const auto& n : ens.path_norms) norms.push_back(n(i));
      member["path_norms"] = norms;
      const std::string rel = "members/member_" + std::to_string(i) + ".json";
      std::ofstream(dir.path(rel)) << member.dump(2) << '\n';
      dir.track(rel);
    }
  }
  dir.track("paths.csv");
  nlohmann::ordered_json clusters = {{"cluster_count", sup.cluster_count},
                                     {"singleton", sup.singleton},
                                     {"max_pairwise", sup.max_pairwise},
                                     {"tol_sep", sup.tol_sep},
                                     {"labels", sup.labels},
                                     {"law", law.to_string()}};
  std::ofstream(dir.path("clusters.json")) << clusters.dump(2) << '\n';
  dir.track("clusters.json");
  dir.results()["clusters"] = clusters;
  dir.results()["law_convergence"] = law_dist;
  dir.mark("outputs");
  dir.write_manifest("PASS");
  std::cout << "law " << law.to_string() << ": " << sup.cluster_count << " cluster(s), max pairwise distance "
            << sup.max_pairwise << " -> " << dir.root().string() << '\n';
  return kPass;
}

int certify_run(const Options& opts) {
  const Config cfg = load_config(certify_keys(), opts);
  BatterySpec spec;
  spec.count = cfg.integer("battery.count");
  spec.kappa_max = cfg.num("battery.kappa_max");
  spec.window_power = cfg.integer("battery.window_power");
  spec.seed = cfg.u64("battery.seed");
  spec.include_initial_datum = cfg.flag("battery.include_initial_datum");
  spec.threshold = cfg.num("threshold");

  fs::path u_stem, r_stem;
  if (!cfg.str("run").empty()) {
    const fs::path run = cfg.str("run");
    int q = cfg.integer("stage");
    if (q < 0) q = read_manifest(run).at("results").at("stages").get<int>() - 1;
    u_stem = run / stage_stem(q, 'v');
    r_stem = run / stage_stem(q, 'r');
  } else {
    if (cfg.str("u").empty()) throw UsageError("certify needs run or u");
    u_stem = cfg.str("u");
    if (!cfg.str("r").empty()) r_stem = cfg.str("r");
  }
  VectorSeries u;
  TensorSeries r;
  try {
    u = io::read_series<VectorField>(u_stem);
    if (!r_stem.empty()) r = io::read_series<SymTensorField>(r_stem);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  RunDir dir(opts.out);
  dir.set_config(cfg.resolved());
  CertificateReport rep;
  try {
    rep = certify(u, r, cfg.num("nu"), spec);
  } catch (const Error& e) {
    dir.results()["error"] = e.what();
    dir.write_manifest("FAIL");
    std::cerr << "certify: " << e.what() << '\n';
    return kFail;
  }
  dir.mark("certify");
  {
    Csv csv(dir.path("certificate.csv"), {"field", "residual"});
    for (std::size_t i = 0; i < rep.residuals.size(); ++i) {
      csv << static_cast<int>(i) << rep.residuals[i];
      csv.end_row();
    }
  }
  dir.track("certificate.csv");
  nlohmann::ordered_json report;
  report["u"] = u_stem.string();
  report["r"] = r_stem.string();
  report["nu"] = cfg.num("nu");
  report["battery"] = {{"count", spec.count},
                       {"kappa_max", spec.kappa_max},
                       {"window_power", spec.window_power},
                       {"seed", spec.seed},
                       {"include_initial_datum", spec.include_initial_datum}};
  report["residuals"] = rep.residuals;
  report["max_residual"] = rep.max_residual;
  report["mean_residual"] = rep.mean_residual;
  report["threshold"] = rep.threshold;
  report["verdict"] = rep.pass ? "PASS" : "FAIL";
  std::ofstream(dir.path("report.json")) << report.dump(2) << '\n';
  dir.track("report.json");
  dir.results()["max_residual"] = rep.max_residual;
  dir.results()["mean_residual"] = rep.mean_residual;
  dir.write_manifest(rep.pass ? "PASS" : "FAIL");
  std::cout << "max normalized residual " << rep.max_residual << " (mean " << rep.mean_residual << ", threshold "
            << rep.threshold << "): " << (rep.pass ? "PASS" : "FAIL") << '\n';
  return rep.pass ? kPass : kFail;
}

std::string describe_ladder_family(const std::string& command) {
  if (command == "ci run") return Config(ci_keys()).describe();
  if (command == "ensemble run") return Config(ensemble_keys()).describe();
  if (command == "certify") return Config(certify_keys()).describe();
  return "";
}

}  // namespace eulab::cli
