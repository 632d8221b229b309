#pragma once

#include <cstdint>
#include <vector>

#include "ctlqr/riccati.hpp"
#include "ctlqr/sde.hpp"
#include "ctlqr/sysid.hpp"

namespace ctlqr {

/// Parameters of one explore-then-commit run over horizon T. The episode
/// always starts from x = 0; with sigma = 0 it is fully deterministic
/// (process noise and exploration dither both vanish).
struct OnlineConfig {
  double T = 0.0;      // horizon (time units)
  double h = 1.0 / 30; // sampling interval
  Matrix K;            // known stabilizer of the hidden system
  LqrWeights weights;
  double kappa = 0.0;  // kappa >= ||A|| + ||B|| ||K||; informational, h = 1/(15 kappa) mode
  std::uint64_t seed = 0;
  double sigma = 1.0;  // noise scale
};

struct SynthesisResult {
  Matrix Kbar;
  bool unstable_ahat = false;  // estimate unusable: no gain stabilizes it, or estimation failed
  bool p_norm_capped = false;  // CARE solved but ||P|| >= T^{1/5}
};

struct RegretRecord {
  int episode = 0;
  double T = 0.0;
  double JT = 0.0;      // realized pathwise cost (trapezoid on the h-grid)
  double JTstar = 0.0;  // expected cost of the K* policy over [0, T]
  double RT = 0.0;      // JT - JTstar
  bool flag_unstable = false;
  bool flag_pcap = false;
  bool flag_div = false;  // divergence guard fired during exploitation
  Matrix Kbar;
};

/// Number of full exploration intervals, floor(sqrt(T)/h).
std::size_t exploration_steps(const OnlineConfig& cfg);

/// Remaining grid intervals after exploration, floor(T/h) - exploration.
std::size_t exploitation_steps(const OnlineConfig& cfg);

/// The T^{1/5} bound used both for the ||P|| cap and the state guard.
double divergence_threshold(double T);

/// sqrt(T) of dithered stabilized exploration: U_t = K X_t + u_k.
SampledTrajectory explore(const ContinuousSystem& sys, const OnlineConfig& cfg, CounterRng& rng);

/// Controller synthesis from the exploration data: discrete least squares,
/// continuous recovery, un-mixing Ahat = Abar - Bbar K, then CARE on the
/// estimate. Every failure (degenerate data, recovery domain, an estimate
/// no gain stabilizes, CARE stall, oversized P) routes to Kbar = K; no
/// input throws.
SynthesisResult synthesize(const SampledTrajectory& traj, const OnlineConfig& cfg);

/// The synthesis branch applied to a given continuous-level estimate.
SynthesisResult synthesize_from_estimate(const Matrix& ahat, const Matrix& bhat,
                                         const OnlineConfig& cfg);

/// Guarded exploitation from sqrt(T) to T: feedback Kbar with permanent
/// fallback to K once ||x|| reaches T^{1/5}.
SampledTrajectory exploit(const ContinuousSystem& sys, const Matrix& kbar, const Matrix& k_known,
                          const Vector& x_start, const OnlineConfig& cfg, CounterRng& rng);

/// Trapezoid cost on the h-grid. The action over interval k is
/// actions[k] (+ feedback * x_k when feedback is given), frozen at the
/// interval start; the state quadratic is averaged over the two endpoints.
double pathwise_quadratic_cost(const SampledTrajectory& traj, const LqrWeights& weights,
                               const Matrix* feedback = nullptr);

/// Expected cost of the optimal stationary policy K* on the true system over
/// [0, T], scaled to the configured noise level.
double optimal_finite_cost(const ContinuousSystem& sys, const OnlineConfig& cfg);

/// One full explore -> synthesize -> exploit episode. Deterministic given
/// (cfg.seed, episode). Pass a precomputed optimal_finite_cost to skip the
/// per-episode CARE + quadrature on the true system.
RegretRecord run_episode(const ContinuousSystem& sys, const OnlineConfig& cfg, int episode,
                         const double* jtstar_cached = nullptr);

/// CSV rows `episode,T,JT,JTstar,RT,flag_unstable,flag_pcap,flag_div`.
std::string regret_records_to_csv(const std::vector<RegretRecord>& records);

}  // namespace ctlqr
