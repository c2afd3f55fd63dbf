// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "eulab/convexint.hpp"

namespace eulab::cli {

inline constexpr int kPass = 0;
inline constexpr int kFail = 1;
inline constexpr int kUsage = 2;

struct Options {
  std::string config;              // --config FILE
  std::vector<std::string> set;    // --set key=value, applied after the file
  std::string out;                 // --out DIR
  std::string run;                 // --run DIR
  std::string in;                  // --in STEM
  double kappa = 0.0;              // --kappa K
};

/// Schema + file + overrides.
Config load_config(std::vector<Key> schema, const Options& opts);

std::vector<Key> ladder_keys();
/// The ladder configuration and q_max = stages - 1.
std::pair<LadderConfig, int> ladder_config(const Config& cfg);

int ci_run(const Options& opts);
int ci_verify(const Options& opts);
int ensemble_run(const Options& opts);
int certify_run(const Options& opts);
int noise_quadform(const Options& opts);
int noise_corrector(const Options& opts);
int noise_simulate(const Options& opts);
int multiscale_reynolds(const Options& opts);
int beltrami_verify(const Options& opts);

/// Key listing for `--list-keys`.
std::string describe_keys(const std::string& command);

}  // namespace eulab::cli
