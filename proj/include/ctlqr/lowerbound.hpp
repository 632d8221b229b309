#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ctlqr/rng.hpp"

namespace ctlqr::lowerbound {

/// Observation times t_0 = 0 < t_1 < ... < t_N = T.
struct ObservationGrid {
  std::vector<double> times;

  static ObservationGrid uniform(double T, int n_gaps);
  void validate() const;
  double T() const { return times.back(); }
  std::size_t gaps() const { return times.size() - 1; }
};

/// The two scalar Ornstein-Uhlenbeck drift hypotheses: base dX = -X dt + dW
/// against the alternative dX = -(1 + delta) X dt + dW.
enum class Hypothesis { Base, Alt };

constexpr double kBaseDrift = -1.0;
inline double alt_drift(double delta) { return -1.0 - delta; }

/// Transition variance over a gap of length t: the base hypothesis has
/// Gamma(t) = (1 - e^{-2t})/2, the alternative (1 - e^{-(2+2delta)t})/(2+2delta).
double gamma_variance(double t, Hypothesis which, double delta);

/// Log likelihood ratio ln(g/gbar) of an observed path (x at each grid time,
/// x_0 = 0) between the two hypotheses. Throws std::invalid_argument on a
/// size mismatch, non-finite values, or x_0 != 0.
double log_density_ratio(const ObservationGrid& grid, const std::vector<double>& xs, double delta);

/// Exact KL divergence between the joint observation laws on the grid,
/// E_g[ln(g/gbar)] = sum_i [-ln gamma_i + (gamma_i^2 - 1)/2
///                          + gamma_i^2 E[beta_i^2] / 2].
double kl_exact(const ObservationGrid& grid, double delta);

/// Path sampled exactly at the grid times under the chosen hypothesis,
/// starting from x = 0.
std::vector<double> simulate_observed(const ObservationGrid& grid, Hypothesis which, double delta,
                                      CounterRng& rng);

struct MonteCarloKl {
  double mean = 0.0;
  double se = 0.0;
  int paths = 0;
};

/// Monte-Carlo mean and standard error of log_density_ratio under the base
/// hypothesis; converges to kl_exact at rate paths^{-1/2}.
MonteCarloKl kl_monte_carlo(const ObservationGrid& grid, double delta, int paths,
                            std::uint64_t seed, int threads = 0);

using Estimator = std::function<double(const std::vector<double>&)>;

/// Maximum-likelihood plug-in from all transitions of a uniform grid: the
/// log of the lag-1 regression coefficient divided by the gap length.
Estimator make_ml_plugin(const ObservationGrid& grid);

/// Plug-in from the final gap only.
Estimator make_single_gap_plugin(const ObservationGrid& grid);

/// Ignores the data and always answers `value`.
Estimator make_constant(double value);

struct RiskResult {
  double p_err_base = 0.0;
  double p_err_alt = 0.0;
  double max_err() const { return p_err_base > p_err_alt ? p_err_base : p_err_alt; }
};

/// Empirical probability, under each hypothesis, that the estimate misses
/// the true drift by at least half the hypothesis separation delta/2
/// (equal to 1/(10 sqrt(T)) at the critical delta = 1/(5 sqrt(T))).
RiskResult estimator_risk(const ObservationGrid& grid, double delta, const Estimator& estimator,
                          int trials, std::uint64_t seed, int threads = 0);

}  // namespace ctlqr::lowerbound
