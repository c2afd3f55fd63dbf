// SPDX-License-Identifier: Apache-2.0
// Command-line driver. Exit codes: 0 PASS, 1 numerical failure, 2 usage error.
#include <deque>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "eulab/error.hpp"
#include "eulab/io.hpp"

namespace cli = eulab::cli;

namespace {

struct Registered {
  CLI::App* app;
  std::string name;
  int (*fn)(const cli::Options&);
  std::string* out;  // per-command --out, copied into the options before dispatch
};

// Storage for the per-command --out values (stable addresses).
std::deque<std::string> out_values;

CLI::App* leaf(CLI::App& parent, const std::string& name, const std::string& help, cli::Options& o,
               const std::string& out_default, bool config = true) {
  CLI::App* sub = parent.add_subcommand(name, help);
  if (config) {
    sub->add_option("--config", o.config, "flat key = value config file");
    sub->add_option("--set", o.set, "override one key (key=value), repeatable");
  }
  out_values.emplace_back();
  if (!out_default.empty())
    sub->add_option("--out", out_values.back(), "output directory")->default_val(out_default);
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for convex integration, alpha-scaled stochastic solutions and transport noise"};
  app.set_version_flag("--version", std::string(eulab::io::version));
  app.require_subcommand(1);
  cli::Options o;
  std::string keys_for;
  app.add_option("--list-keys", keys_for,
                 "print the config keys of a command, e.g. \"ci run\" or \"noise simulate\", and exit");

  std::vector<Registered> commands;
  CLI::App* ci = app.add_subcommand("ci", "Euler-Reynolds iteration runs");
  ci->require_subcommand(1);
  commands.push_back({leaf(*ci, "run", "run the iteration and write a run directory", o, "run"), "ci run", cli::ci_run,
                      &out_values.back()});
  {
    CLI::App* v = leaf(*ci, "verify", "recheck checksums and stage residuals of a run directory", o, "", false);
    v->add_option("--run", o.run, "run directory")->required();
    commands.push_back({v, "ci verify", cli::ci_verify, &out_values.back()});
  }
  CLI::App* ens = app.add_subcommand("ensemble", "alpha-scaled ensembles");
  ens->require_subcommand(1);
  commands.push_back({leaf(*ens, "run", "sample an ensemble and report distances and clusters", o, "ensemble"),
                      "ensemble run", cli::ensemble_run, &out_values.back()});
  CLI::App* noise = app.add_subcommand("noise", "transport noise");
  noise->require_subcommand(1);
  commands.push_back({leaf(*noise, "quadform", "quadratic form 1/2 sum sigma (x) sigma", o, "noise_quadform"),
                      "noise quadform", cli::noise_quadform, &out_values.back()});
  commands.push_back({leaf(*noise, "corrector", "Ito corrector and eddy-viscosity fit", o, "noise_corrector"),
                      "noise corrector", cli::noise_corrector, &out_values.back()});
  commands.push_back({leaf(*noise, "simulate", "Euler-Maruyama ensemble for the noisy vorticity equation", o,
                           "noise_simulate"),
                      "noise simulate", cli::noise_simulate, &out_values.back()});
  // shorthands for the certify keys; applied after --set
  std::vector<std::pair<std::string, std::string>> certify_flags{
      {"u", ""}, {"r", ""}, {"nu", ""}, {"battery.count", ""}, {"battery.seed", ""}};
  {
    CLI::App* c = leaf(app, "certify", "weak-form residual certificate of a (u, R) pair", o, "certificate");
    c->add_option("--u", certify_flags[0].second, "velocity series dump stem");
    c->add_option("--r", certify_flags[1].second, "stress series dump stem");
    c->add_option("--nu", certify_flags[2].second, "viscosity");
    c->add_option("--battery", certify_flags[3].second, "number of test fields");
    c->add_option("--seed", certify_flags[4].second, "battery seed");
    commands.push_back({c, "certify", cli::certify_run, &out_values.back()});
  }
  CLI::App* ms = app.add_subcommand("multiscale", "large/small-scale decomposition");
  ms->require_subcommand(1);
  {
    CLI::App* r = leaf(*ms, "reynolds", "Reynolds stress of a velocity dump at filter scale kappa", o, "", false);
    r->add_option("--in", o.in, "velocity field dump stem")->required();
    r->add_option("--out", out_values.back(), "output tensor dump stem")->required();
    r->add_option("--kappa", o.kappa, "filter wavenumber")->required();
    commands.push_back({r, "multiscale reynolds", cli::multiscale_reynolds, &out_values.back()});
  }
  CLI::App* bel = app.add_subcommand("beltrami", "Beltrami waves");
  bel->require_subcommand(1);
  {
    CLI::App* v = leaf(*bel, "verify", "check the Beltrami identities on random coefficients", o, "");
    v->add_option("--out", out_values.back(), "optional output directory for a manifest");
    commands.push_back({v, "beltrami verify", cli::beltrami_verify, &out_values.back()});
  }

  // --list-keys works without a subcommand
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--list-keys") {
      const std::string text = cli::describe_keys(argv[i + 1]);
      if (text.empty()) {
        std::cerr << "no config keys for '" << argv[i + 1] << "'\n";
        return cli::kUsage;
      }
      std::cout << text;
      return cli::kPass;
    }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? cli::kPass : cli::kUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? cli::kPass : cli::kUsage;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e);
    return cli::kPass;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  for (const Registered& c : commands) {
    if (!c.app->parsed()) continue;
    o.out = *c.out;
    if (c.fn == cli::certify_run)
      for (const auto& [key, value] : certify_flags)
        if (!value.empty()) o.set.push_back(key + "=" + value);
    try {
      return c.fn(o);
    } catch (const cli::UsageError& e) {
      std::cerr << c.name << ": " << e.what() << '\n';
      return cli::kUsage;
    } catch (const eulab::Error& e) {
      std::cerr << c.name << ": " << e.what() << '\n';
      return e.code() == eulab::ErrorCode::InvalidArgument || e.code() == eulab::ErrorCode::Io ? cli::kUsage
                                                                                                : cli::kFail;
    }
  }
  std::cerr << app.help();
  return cli::kUsage;
}
