#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctlqr/config.hpp"
#include "ctlqr/online.hpp"
#include "ctlqr/rng.hpp"

namespace ctlqr {

inline constexpr const char* kToolVersion = "ctlqr 1.0.0";

struct OutputFile {
  std::string name;
  std::uint64_t checksum = 0;
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  double wall_clock_seconds = 0.0;
  std::vector<OutputFile> outputs;
  int failed_points = 0;
};

/// Ground truth drawn for one experiment unit, together with the stabilizer
/// and the step size implied by the h mode.
struct GeneratedSystem {
  ContinuousSystem sys;
  Matrix K;
  LqrWeights weights;
  double kappa = 0.0;  // ||A|| + ||B|| ||K||
  double h = 0.0;
};

GeneratedSystem generate_system(const ExperimentConfig& cfg, CounterRng& rng);

/// Ordinary-least-squares slope of log y against log x (points with
/// non-positive coordinates are skipped).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Dispatches to the configured experiment, writes its CSV/SVG outputs under
/// cfg.out_dir, and returns the manifest (also written as manifest.json).
/// A failing grid point is recorded in failures.csv and the run continues.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace ctlqr
