#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctlqr/matrix_ops.hpp"

namespace ctlqr {

enum class ExperimentKind { SysidSingle, SysidMulti, OnlineRegret, Lowerbound };

/// Whether h comes from the config verbatim or from 1/(15 kappa) with kappa
/// computed off the generated truth.
enum class HMode { Fixed, Kappa };

struct MatrixSpec {
  enum class Rule { Uniform, Stable, Identity, Zero, Explicit };
  Rule rule = Rule::Identity;
  Matrix value;  // only for Explicit
};

struct GainSpec {
  enum class Rule { Auto, Zero, Explicit };
  Rule rule = Rule::Auto;
  Matrix value;  // only for Explicit
};

struct SystemSpec {
  int d = 3;
  int p = 3;
  MatrixSpec A{MatrixSpec::Rule::Uniform, {}};
  MatrixSpec B{MatrixSpec::Rule::Identity, {}};
  MatrixSpec Q{MatrixSpec::Rule::Identity, {}};
  MatrixSpec R{MatrixSpec::Rule::Identity, {}};
  GainSpec K{GainSpec::Rule::Auto, {}};
};

struct LowerboundParams {
  std::vector<double> T_grid{1.0, 4.0, 16.0};
  std::vector<int> N_grid{1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  int mc_paths = 100000;
  int risk_trials = 10000;
  double risk_T = 4.0;
  int risk_N = 400;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SysidSingle;
  std::uint64_t seed = 1;
  double sigma = 1.0;
  double h = 1.0 / 30.0;
  HMode h_mode = HMode::Fixed;
  SystemSpec system;
  std::vector<double> T_grid;
  std::vector<int> H_grid;
  int T0 = 2;
  int episodes = 0;  // 0 = per-experiment default (50 for online-regret, 20 otherwise)
  std::string out_dir = "out";
  int threads = 0;
  LowerboundParams lowerbound;

  int effective_episodes() const;
};

const char* experiment_name(ExperimentKind kind);

/// Strict parse: unknown keys are rejected with their field path, schema
/// violations raise ConfigError. Defaults follow the reference experiment
/// setup (d = p = 3, B = Q = R = identity, h = 1/30).
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Canonical JSON with every field materialized; re-parsing it reproduces
/// the config exactly.
std::string canonical_json(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

}  // namespace ctlqr
