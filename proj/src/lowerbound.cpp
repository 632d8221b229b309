#include "ctlqr/lowerbound.hpp"

#include <cmath>
#include <stdexcept>

#include "ctlqr/parallel.hpp"

namespace ctlqr::lowerbound {

ObservationGrid ObservationGrid::uniform(double T, int n_gaps) {
  if (!(T > 0.0) || n_gaps < 1) throw std::invalid_argument("uniform grid: bad parameters");
  ObservationGrid grid;
  grid.times.resize(static_cast<std::size_t>(n_gaps) + 1);
  for (int i = 0; i <= n_gaps; ++i) {
    grid.times[static_cast<std::size_t>(i)] = T * static_cast<double>(i) / n_gaps;
  }
  grid.times.back() = T;
  return grid;
}

void ObservationGrid::validate() const {
  if (times.size() < 2 || times.front() != 0.0) {
    throw std::invalid_argument("grid: need t_0 = 0 and at least one later time");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !std::isfinite(times[i])) {
      throw std::invalid_argument("grid: times must be finite and strictly increasing");
    }
  }
}

double gamma_variance(double t, Hypothesis which, double delta) {
  if (t < 0.0) throw std::invalid_argument("gamma_variance: negative gap");
  const double rate = which == Hypothesis::Base ? 2.0 : 2.0 + 2.0 * delta;
  return -std::expm1(-rate * t) / rate;
}

namespace {

struct GapTerms {
  double gamma_sq;      // Gamma / Gammabar over this gap
  double mean_factor;   // e^{-dt} - e^{-(1+delta) dt}
  double gamma_var;     // Gamma(dt)
};

GapTerms gap_terms(double dt, double delta) {
  const double g = gamma_variance(dt, Hypothesis::Base, delta);
  const double gbar = gamma_variance(dt, Hypothesis::Alt, delta);
  return {g / gbar, std::exp(-dt) - std::exp(-(1.0 + delta) * dt), g};
}

}  // namespace

double log_density_ratio(const ObservationGrid& grid, const std::vector<double>& xs,
                         double delta) {
  grid.validate();
  if (xs.size() != grid.times.size()) {
    throw std::invalid_argument("log_density_ratio: path length does not match the grid");
  }
  if (xs.front() != 0.0) {
    throw std::invalid_argument("log_density_ratio: the construction starts at x_0 = 0");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) throw std::invalid_argument("log_density_ratio: non-finite value");
    const double dt = grid.times[i] - grid.times[i - 1];
    const GapTerms g = gap_terms(dt, delta);
    const double inv_sd = 1.0 / std::sqrt(g.gamma_var);
    const double alpha = inv_sd * (xs[i] - std::exp(-dt) * xs[i - 1]);
    const double beta = inv_sd * g.mean_factor * xs[i - 1];
    const double ab = alpha + beta;
    total += -0.5 * std::log(g.gamma_sq) + 0.5 * g.gamma_sq * ab * ab - 0.5 * alpha * alpha;
  }
  return total;
}

double kl_exact(const ObservationGrid& grid, double delta) {
  grid.validate();
  if (delta < 0.0) throw std::invalid_argument("kl_exact: delta must be nonnegative");
  double total = 0.0;
  for (std::size_t i = 1; i < grid.times.size(); ++i) {
    const double dt = grid.times[i] - grid.times[i - 1];
    const GapTerms g = gap_terms(dt, delta);
    // Under the base law X_{t_{i-1}} ~ N(0, Gamma(t_{i-1})) from the zero start.
    const double state_var = gamma_variance(grid.times[i - 1], Hypothesis::Base, delta);
    const double e_beta_sq = state_var * g.mean_factor * g.mean_factor / g.gamma_var;
    total += -0.5 * std::log(g.gamma_sq) + 0.5 * (g.gamma_sq - 1.0) + 0.5 * g.gamma_sq * e_beta_sq;
  }
  return total;
}

std::vector<double> simulate_observed(const ObservationGrid& grid, Hypothesis which, double delta,
                                      CounterRng& rng) {
  grid.validate();
  const double drift = which == Hypothesis::Base ? kBaseDrift : alt_drift(delta);
  std::vector<double> xs(grid.times.size());
  xs[0] = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double dt = grid.times[i] - grid.times[i - 1];
    const double sd = std::sqrt(gamma_variance(dt, which, delta));
    xs[i] = std::exp(drift * dt) * xs[i - 1] + sd * rng.next_gaussian();
  }
  return xs;
}

MonteCarloKl kl_monte_carlo(const ObservationGrid& grid, double delta, int paths,
                            std::uint64_t seed, int threads) {
  grid.validate();
  if (paths < 2) throw std::invalid_argument("kl_monte_carlo: need at least 2 paths");
  std::vector<double> values(static_cast<std::size_t>(paths));
  par::parallel_for(
      values.size(),
      [&](std::size_t i) {
        CounterRng rng(seed, {0x4b4cu, i});
        const auto xs = simulate_observed(grid, Hypothesis::Base, delta, rng);
        values[i] = log_density_ratio(grid, xs, delta);
      },
      threads);

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(paths);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(paths - 1);
  return {mean, std::sqrt(var / paths), paths};
}

Estimator make_ml_plugin(const ObservationGrid& grid) {
  grid.validate();
  const double dt = grid.times[1] - grid.times[0];
  for (std::size_t i = 1; i < grid.times.size(); ++i) {
    if (std::abs(grid.times[i] - grid.times[i - 1] - dt) > 1e-9 * dt) {
      throw std::invalid_argument("ml_plugin: grid must be uniform");
    }
  }
  return [dt](const std::vector<double>& xs) {
    double s_xy = 0.0, s_xx = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      s_xy += xs[i - 1] * xs[i];
      s_xx += xs[i - 1] * xs[i - 1];
    }
    if (!(s_xx > 0.0) || !(s_xy > 0.0)) return 0.0;  // wild data; counts as an error
    return std::log(s_xy / s_xx) / dt;
  };
}

Estimator make_single_gap_plugin(const ObservationGrid& grid) {
  grid.validate();
  const double dt = grid.times.back() - grid.times[grid.times.size() - 2];
  return [dt](const std::vector<double>& xs) {
    const double prev = xs[xs.size() - 2];
    const double last = xs.back();
    if (prev == 0.0 || last / prev <= 0.0) return 0.0;
    return std::log(last / prev) / dt;
  };
}

Estimator make_constant(double value) {
  return [value](const std::vector<double>&) { return value; };
}

RiskResult estimator_risk(const ObservationGrid& grid, double delta, const Estimator& estimator,
                          int trials, std::uint64_t seed, int threads) {
  grid.validate();
  if (trials < 100) throw std::invalid_argument("estimator_risk: need at least 100 trials");
  const double separation = 0.5 * delta;

  RiskResult result;
  for (const Hypothesis which : {Hypothesis::Base, Hypothesis::Alt}) {
    const double truth = which == Hypothesis::Base ? kBaseDrift : alt_drift(delta);
    std::vector<unsigned char> miss(static_cast<std::size_t>(trials));
    par::parallel_for(
        miss.size(),
        [&](std::size_t i) {
          CounterRng rng(seed, {0x5249534bu, static_cast<std::uint64_t>(which), i});
          const auto xs = simulate_observed(grid, which, delta, rng);
          miss[i] = std::abs(estimator(xs) - truth) >= separation ? 1 : 0;
        },
        threads);
    long count = 0;
    for (unsigned char m : miss) count += m;
    const double p = static_cast<double>(count) / trials;
    (which == Hypothesis::Base ? result.p_err_base : result.p_err_alt) = p;
  }
  return result;
}

}  // namespace ctlqr::lowerbound
