#include "ctlqr/online.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {
constexpr std::uint64_t kEpisodeStream = 0x45504953u;  // tag separating episode rng streams
}

std::size_t exploration_steps(const OnlineConfig& cfg) {
  return static_cast<std::size_t>(std::floor(std::sqrt(cfg.T) / cfg.h));
}

std::size_t exploitation_steps(const OnlineConfig& cfg) {
  const auto total = static_cast<std::size_t>(std::floor(cfg.T / cfg.h));
  const std::size_t explore = exploration_steps(cfg);
  if (total <= explore) {
    throw std::invalid_argument("exploitation_steps: horizon leaves no exploitation phase");
  }
  return total - explore;
}

double divergence_threshold(double T) { return std::pow(T, 0.2); }

SampledTrajectory explore(const ContinuousSystem& sys, const OnlineConfig& cfg, CounterRng& rng) {
  NoiseModel noise{cfg.sigma, cfg.seed};
  const double dither = cfg.sigma == 0.0 ? 0.0 : 1.0;
  return simulate_dithered_feedback(sys, cfg.K, Vector::Zero(sys.d()), exploration_steps(cfg),
                                    cfg.h, noise, rng, dither);
}

SynthesisResult synthesize_from_estimate(const Matrix& ahat, const Matrix& bhat,
                                         const OnlineConfig& cfg) {
  SynthesisResult out;
  out.Kbar = cfg.K;
  try {
    // The estimate enters the Riccati solve through a stabilizing start:
    // the known stabilizer when it also stabilizes the estimate, otherwise
    // an eigenvalue-shift gain. An estimate no gain can stabilize is the
    // "unstable" fallback branch.
    Matrix k0;
    if (stability_margin(ahat + bhat * cfg.K) < -1e-9) {
      k0 = cfg.K;
    } else {
      k0 = shifted_stabilizer(ahat, bhat, spectral_norm(ahat) + 0.5);
      if (stability_margin(ahat + bhat * k0) >= -1e-9) {
        out.unstable_ahat = true;
        return out;
      }
    }
    const RiccatiSolution sol = solve_care(ahat, bhat, cfg.weights, k0);
    if (spectral_norm(sol.P) >= divergence_threshold(cfg.T)) {
      out.p_norm_capped = true;
      return out;
    }
    out.Kbar = optimal_gain(sol.P, bhat, cfg.weights);
  } catch (const std::exception&) {
    out.unstable_ahat = true;
    out.Kbar = cfg.K;
  }
  return out;
}

SynthesisResult synthesize(const SampledTrajectory& traj, const OnlineConfig& cfg) {
  Matrix ahat, bhat;
  try {
    const auto [atilde, btilde] = estimate_discrete_single(traj);
    const auto [abar, bbar] = recover_continuous(atilde, btilde, cfg.h);
    ahat = abar - bbar * cfg.K;  // the data came from the closed loop (A + BK, B)
    bhat = bbar;
  } catch (const std::exception&) {
    SynthesisResult out;
    out.Kbar = cfg.K;
    out.unstable_ahat = true;
    return out;
  }
  return synthesize_from_estimate(ahat, bhat, cfg);
}

SampledTrajectory exploit(const ContinuousSystem& sys, const Matrix& kbar, const Matrix& k_known,
                          const Vector& x_start, const OnlineConfig& cfg, CounterRng& rng) {
  NoiseModel noise{cfg.sigma, cfg.seed};
  return simulate_feedback_guarded(sys, kbar, k_known, x_start, exploitation_steps(cfg), cfg.h,
                                   divergence_threshold(cfg.T), noise, rng);
}

double pathwise_quadratic_cost(const SampledTrajectory& traj, const LqrWeights& weights,
                               const Matrix* feedback) {
  double cost = 0.0;
  for (std::size_t k = 0; k < traj.transitions(); ++k) {
    const Vector& x0 = traj.states[k];
    const Vector& x1 = traj.states[k + 1];
    Vector u = traj.actions[k];
    if (feedback) u += *feedback * x0;
    const double state_part = 0.5 * (x0.dot(weights.Q * x0) + x1.dot(weights.Q * x1));
    cost += traj.h * (state_part + u.dot(weights.R * u));
  }
  return cost;
}

double optimal_finite_cost(const ContinuousSystem& sys, const OnlineConfig& cfg) {
  const RiccatiSolution sol = solve_care(sys.A, sys.B, cfg.weights, cfg.K);
  const Matrix kstar = optimal_gain(sol.P, sys.B, cfg.weights);
  const FiniteCostTerms terms =
      expected_cost_finite_terms(sys, cfg.weights, kstar, Vector::Zero(sys.d()), cfg.T);
  return terms.state_term + cfg.sigma * cfg.sigma * terms.noise_term;
}

RegretRecord run_episode(const ContinuousSystem& sys, const OnlineConfig& cfg, int episode,
                         const double* jtstar_cached) {
  CounterRng rng(cfg.seed, {kEpisodeStream, static_cast<std::uint64_t>(episode)});

  const SampledTrajectory exploration = explore(sys, cfg, rng);
  const double j_explore = pathwise_quadratic_cost(exploration, cfg.weights, &cfg.K);

  const SynthesisResult syn = synthesize(exploration, cfg);
  const SampledTrajectory exploitation =
      exploit(sys, syn.Kbar, cfg.K, exploration.states.back(), cfg, rng);
  const double j_exploit = pathwise_quadratic_cost(exploitation, cfg.weights);

  RegretRecord rec;
  rec.episode = episode;
  rec.T = cfg.T;
  rec.JT = j_explore + j_exploit;
  rec.JTstar = jtstar_cached ? *jtstar_cached : optimal_finite_cost(sys, cfg);
  rec.RT = rec.JT - rec.JTstar;
  rec.flag_unstable = syn.unstable_ahat;
  rec.flag_pcap = syn.p_norm_capped;
  rec.flag_div = exploitation.event.has_value();
  rec.Kbar = syn.Kbar;
  return rec;
}

std::string regret_records_to_csv(const std::vector<RegretRecord>& records) {
  std::string out = "episode,T,JT,JTstar,RT,flag_unstable,flag_pcap,flag_div\n";
  char buf[192];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%d,%d,%d\n", r.episode, r.T, r.JT,
                  r.JTstar, r.RT, r.flag_unstable ? 1 : 0, r.flag_pcap ? 1 : 0,
                  r.flag_div ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace ctlqr
