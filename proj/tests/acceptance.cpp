// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctlqr/config.hpp"
#include "ctlqr/csv.hpp"
#include "ctlqr/experiments.hpp"
#include "ctlqr/lowerbound.hpp"
#include "ctlqr/matrix_ops.hpp"
#include "ctlqr/online.hpp"
#include "ctlqr/riccati.hpp"
#include "ctlqr/rng.hpp"
#include "ctlqr/sde.hpp"
#include "ctlqr/sysid.hpp"

using namespace ctlqr;

namespace {

char detail_buffer[512];

#define DETAIL(...) std::snprintf(detail_buffer, sizeof(detail_buffer), __VA_ARGS__)

Matrix random_matrix(CounterRng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = 2.0 * rng.next_double() - 1.0;
  }
  return m;
}

/// Stable A with ||A|| <= 2, so ||A h|| <= 1/15 at h = 1/30.
Matrix random_stable_capped(CounterRng& rng, Eigen::Index d) {
  Matrix a = random_matrix(rng, d, d);
  a -= (stability_margin(a) + 0.5) * Matrix::Identity(d, d);
  const double n = spectral_norm(a);
  if (n > 2.0) a *= 2.0 / n;
  return a;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

double wilson_lower(double p_hat, int n, double z = 1.959963985) {
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = p_hat + z2 / (2.0 * n);
  const double rad = z * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n));
  return (center - rad) / denom;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SampledTrajectory open_loop(const ContinuousSystem& sys, double h, std::size_t steps,
                            double sigma, CounterRng& rng) {
  NoiseModel noise{sigma, 0};
  const Matrix k0 = Matrix::Zero(sys.p(), sys.d());
  return simulate_dithered_feedback(sys, k0, Vector::Zero(sys.d()), steps, h, noise, rng);
}

// --------------------------------------------------------------------------

bool criterion_1_noiseless_exact() {
  const double h = 1.0 / 30.0;
  double worst_a = 0.0, worst_b = 0.0;
  for (int s = 0; s < 100; ++s) {
    CounterRng rng(1000 + s);
    const ContinuousSystem sys{random_stable_capped(rng, 3), random_matrix(rng, 3, 3)};
    SampledTrajectory traj = open_loop(sys, h, 20, 0.0, rng);
    const SysIdEstimate est = identify_single(traj);
    worst_a = std::max(worst_a, spectral_norm(est.Ahat - sys.A));
    worst_b = std::max(worst_b, spectral_norm(est.Bhat - sys.B));
  }
  DETAIL("max ||Ahat-A|| %.2e, max ||Bhat-B|| %.2e (tol 1e-8)", worst_a, worst_b);
  return worst_a <= 1e-8 && worst_b <= 1e-8;
}

bool criterion_2_single_trajectory_rate() {
  const double h = 1.0 / 30.0;
  const std::vector<double> t_grid{250, 500, 1000, 2000, 4000};
  std::vector<double> log_t, log_err;
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    std::vector<double> errs;
    for (int s = 0; s < 20; ++s) {
      CounterRng sys_rng(2000 + s);
      const ContinuousSystem sys{random_stable_capped(sys_rng, 3), random_matrix(sys_rng, 3, 3)};
      CounterRng sim_rng(2100 + s, {ti});
      const auto steps = static_cast<std::size_t>(std::ceil(t_grid[ti] / h));
      SampledTrajectory traj = open_loop(sys, h, steps, 1.0, sim_rng);
      const SysIdEstimate est = identify_single(traj);
      errs.push_back((est.Ahat - sys.A).norm());
    }
    log_t.push_back(t_grid[ti]);
    log_err.push_back(median(errs));
  }
  const double slope = loglog_slope(log_t, log_err);
  DETAIL("log-log slope of median ||Ahat-A||_F vs T: %.3f (window [-0.65, -0.35])", slope);
  return slope >= -0.65 && slope <= -0.35;
}

bool criterion_3_multi_trajectory_rate() {
  const double h = 1.0 / 30.0;
  const std::vector<int> h_grid{250, 500, 1000, 2000, 4000, 8000, 16000};
  std::vector<double> xs, errs_med;
  for (std::size_t hi = 0; hi < h_grid.size(); ++hi) {
    std::vector<double> errs;
    for (int s = 0; s < 20; ++s) {
      CounterRng rng(3000 + s, {hi});
      Matrix a = random_matrix(rng, 3, 3);
      const double n = spectral_norm(a);
      if (n > 2.0) a *= 2.0 / n;  // kappa_A = 2 with h = 1/(15 kappa_A)
      const ContinuousSystem sys{a, random_matrix(rng, 3, 3)};
      MultiTrajectoryBatch batch;
      batch.trajectories.reserve(h_grid[hi]);
      for (int l = 0; l < h_grid[hi]; ++l) {
        batch.trajectories.push_back(open_loop(sys, h, 2, 1.0, rng));
      }
      const auto [atilde, btilde] = estimate_discrete_multi(batch);
      const auto [ahat, bhat] = recover_continuous(atilde, btilde, h);
      errs.push_back((ahat - sys.A).norm());
    }
    xs.push_back(h_grid[hi]);
    errs_med.push_back(median(errs));
  }
  const double slope = loglog_slope(xs, errs_med);
  DETAIL("log-log slope of median ||Ahat-A||_F vs H: %.3f (window [-0.65, -0.35])", slope);
  return slope >= -0.65 && slope <= -0.35;
}

bool criterion_4_transition_distribution() {
  CounterRng rng(4000);
  const ContinuousSystem sys{random_stable_capped(rng, 3), random_matrix(rng, 3, 3)};
  const DiscretizedSystem disc = discretize(sys, 1.0 / 30.0);
  NoiseModel noise{1.0, 0};
  Vector x(3), u(3);
  x << 0.7, -0.4, 0.2;
  u << 1.0, 0.5, -1.0;
  const Vector mean_pred = disc.Aprime * x + disc.Bprime * u;

  const int n = 100000;
  Vector mean = Vector::Zero(3);
  Matrix second = Matrix::Zero(3, 3);
  CounterRng draw(4001);
  for (int i = 0; i < n; ++i) {
    const Vector w = step(disc, x, u, noise, draw) - mean_pred;
    mean += w;
    second += w * w.transpose();
  }
  mean /= n;
  const Matrix cov = second / n - mean * mean.transpose();

  const double mean_tol = 4.0 * std::sqrt(spectral_norm(disc.Sigma) / n);
  const double mean_worst = mean.cwiseAbs().maxCoeff();
  const double cov_rel = (cov - disc.Sigma).norm() / disc.Sigma.norm();
  DETAIL("worst |mean| %.2e (tol %.2e), cov rel Frobenius error %.4f (tol 0.02)", mean_worst,
         mean_tol, cov_rel);
  return mean_worst <= mean_tol && cov_rel <= 0.02;
}

bool criterion_5_riccati() {
  Matrix a1(1, 1), b1(1, 1), q1(1, 1), r1(1, 1), k1(1, 1);
  a1 << -1.0;
  b1 << 1.0;
  q1 << 1.0;
  r1 << 1.0;
  k1 << 0.0;
  const RiccatiSolution scalar = solve_care(a1, b1, {q1, r1}, k1);
  const double scalar_err = std::abs(scalar.P(0, 0) - (std::sqrt(2.0) - 1.0));

  double worst_residual = 0.0;
  bool loops_stable = true;
  for (int s = 0; s < 10; ++s) {
    CounterRng rng(5000 + s);
    const Matrix a = random_matrix(rng, 3, 3);
    const Matrix b = Matrix::Identity(3, 3);
    const LqrWeights w{Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
    const Matrix k0 = shifted_stabilizer(a, b, spectral_norm(a) + 0.5);
    const RiccatiSolution sol = solve_care(a, b, w, k0);
    worst_residual = std::max(worst_residual, sol.residual);
    loops_stable =
        loops_stable && stability_margin(a + b * optimal_gain(sol.P, b, w)) < 0.0;
  }

  const Matrix lyap = solve_lyapunov(-Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  const double lyap_err = (lyap - 0.5 * Matrix::Identity(3, 3)).norm();

  DETAIL("scalar CARE err %.2e (tol 1e-10), worst residual %.2e (tol 1e-9), "
         "closed loops stable %s, Lyapunov err %.2e",
         scalar_err, worst_residual, loops_stable ? "yes" : "NO", lyap_err);
  return scalar_err <= 1e-10 && worst_residual <= 1e-9 && loops_stable && lyap_err <= 1e-14;
}

bool criterion_6_error_transfer() {
  int violations = 0;
  double worst_margin = 0.0;  // max over cases of error/bound
  for (int s = 0; s < 100; ++s) {
    CounterRng rng(6000 + s);
    Matrix a = random_matrix(rng, 3, 3);
    a -= (stability_margin(a) + 0.5) * Matrix::Identity(3, 3);
    Matrix b = random_matrix(rng, 3, 3);
    if (spectral_norm(b) < 0.2) b += Matrix::Identity(3, 3);
    const double kappa_a = spectral_norm(a);
    const double kappa_b = spectral_norm(b);
    const double h = 1.0 / (15.0 * kappa_a);

    for (double eps : {1e-4, 1e-3, 1e-2, 1.0 / 15.0}) {
      Matrix da = random_matrix(rng, 3, 3);
      da *= eps / spectral_norm(da);
      Matrix db = random_matrix(rng, 3, 3);
      db *= eps / spectral_norm(db);
      const auto [ahat, bhat] =
          recover_continuous(expm(a, h) + da, exp_integral(a, h) * b + db, h);
      const double bound = error_transfer_bound(eps, h, kappa_a, kappa_b);
      const double err = std::max(spectral_norm(ahat - a), spectral_norm(bhat - b));
      worst_margin = std::max(worst_margin, err / bound);
      if (err > bound) ++violations;
    }
  }
  DETAIL("400 cases, %d violations, worst error/bound ratio %.3f", violations, worst_margin);
  return violations == 0;
}

bool criterion_7_regret() {
  auto cfg = parse_config_text(
      R"({"experiment":"online-regret","T_grid":[600,1200,2500,5000,10000],
          "episodes":50,"seed":2026,"h":0.03333333333333333})");
  cfg.h = 1.0 / 30.0;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "ctlqr_acceptance_regret").string();
  std::filesystem::remove_all(cfg.out_dir);
  const RunManifest manifest = run_experiment(cfg);
  if (manifest.failed_points != 0) {
    DETAIL("%d experiment points failed", manifest.failed_points);
    return false;
  }

  const auto parse_two_columns = [](const std::string& text) {
    std::map<double, double> out;
    std::stringstream lines(text);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
      std::stringstream cells(line);
      std::string t, v;
      std::getline(cells, t, ',');
      std::getline(cells, v, ',');
      out[std::stod(t)] = std::stod(v);
    }
    return out;
  };
  const auto ours = parse_two_columns(slurp(std::filesystem::path(cfg.out_dir) / "regret.csv"));
  const auto base =
      parse_two_columns(slurp(std::filesystem::path(cfg.out_dir) / "regret_baseline.csv"));

  const std::vector<double> top{2500, 5000, 10000};
  double lo = 1e300, hi = -1e300;
  bool positive = true;
  for (double t : top) {
    const double v = ours.at(t);
    positive = positive && v > 0.0;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double ratio = hi / lo;
  const bool beats_baseline = ours.at(10000) < base.at(10000);
  DETAIL("normalized regret at top T: [%.2f, %.2f] ratio %.2f (tol 3); "
         "at T=1e4 ours %.2f vs baseline %.2f",
         lo, hi, ratio, ours.at(10000), base.at(10000));
  return positive && ratio <= 3.0 && beats_baseline;
}

bool criterion_8_kl_plateau() {
  double worst_bound = 0.0;
  for (double T : {1.0, 4.0, 16.0}) {
    const double delta = 1.0 / (5.0 * std::sqrt(T));
    double prev = 0.0;
    for (int n = 1; n <= 512; n *= 2) {
      const double kl = lowerbound::kl_exact(lowerbound::ObservationGrid::uniform(T, n), delta);
      if (kl < prev - 1e-12) {
        DETAIL("kl_exact decreased under refinement at T=%g, N=%d", T, n);
        return false;
      }
      prev = kl;
      worst_bound = std::max(worst_bound, kl / (3.0 * delta * delta * T));
    }
    const auto grid = lowerbound::ObservationGrid::uniform(T, 128);
    const double exact = lowerbound::kl_exact(grid, delta);
    const auto mc = lowerbound::kl_monte_carlo(grid, delta, 100000, 8000);
    if (std::abs(mc.mean - exact) > 3.0 * mc.se) {
      DETAIL("MC mean %.5f vs exact %.5f exceeds 3 SE (%.5f) at T=%g", mc.mean, exact, mc.se, T);
      return false;
    }
  }
  DETAIL("monotone in N for all T; max kl/(3 delta^2 T) = %.3f; MC within 3 SE", worst_bound);
  return worst_bound <= 1.0;
}

bool criterion_9_risk_floor() {
  const double T = 4.0;
  const double delta = 1.0 / (5.0 * std::sqrt(T));
  const auto grid = lowerbound::ObservationGrid::uniform(T, 400);
  const int trials = 10000;
  const auto risk =
      lowerbound::estimator_risk(grid, delta, lowerbound::make_ml_plugin(grid), trials, 9000);
  const double floor = 1.0 / (4.0 * std::exp(3.0));
  const double lower = wilson_lower(risk.max_err(), trials);
  DETAIL("max p_err %.4f, Wilson lower bound %.4f, floor %.4f", risk.max_err(), lower, floor);
  return lower >= floor;
}

bool criterion_10_reproducibility() {
  const auto run_into = [](ExperimentConfig cfg, const std::string& tag, int threads) {
    cfg.out_dir =
        (std::filesystem::temp_directory_path() / ("ctlqr_acceptance_rep_" + tag)).string();
    cfg.threads = threads;
    std::filesystem::remove_all(cfg.out_dir);
    run_experiment(cfg);
    std::map<std::string, std::string> bytes;
    for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir)) {
      const std::string name = entry.path().filename().string();
      if (name == "manifest.json") continue;  // carries wall-clock timing
      bytes[name] = slurp(entry.path());
    }
    return bytes;
  };
  const auto same = [](const std::map<std::string, std::string>& a,
                       const std::map<std::string, std::string>& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [name, content] : a) {
      const auto it = b.find(name);
      if (it == b.end() || it->second != content) return false;
    }
    return true;
  };

  auto online = parse_config_text(
      R"({"experiment":"online-regret","T_grid":[600,900],"episodes":3,"seed":99})");
  const auto o1 = run_into(online, "o1", 1);
  const auto o2 = run_into(online, "o2", 4);
  const auto o3 = run_into(online, "o3", 1);

  auto lb = parse_config_text(
      R"({"experiment":"lowerbound",
          "lowerbound":{"T_grid":[1,4],"N_grid":[2,8,32],"mc_paths":5000,
                        "risk_trials":400,"risk_T":4,"risk_N":64}})");
  const auto l1 = run_into(lb, "l1", 1);
  const auto l2 = run_into(lb, "l2", 4);

  const bool ok = same(o1, o2) && same(o1, o3) && same(l1, l2);
  DETAIL("online run: %zu files, rerun identical %s, threads 1 vs 4 identical %s; "
         "lowerbound threads 1 vs 4 identical %s",
         o1.size(), same(o1, o3) ? "yes" : "NO", same(o1, o2) ? "yes" : "NO",
         same(l1, l2) ? "yes" : "NO");
  return ok;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<bool()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "noiseless exact identification", 10.0, criterion_1_noiseless_exact},
      {2, "single-trajectory error rate ~ T^{-1/2}", 180.0, criterion_2_single_trajectory_rate},
      {3, "multi-trajectory error rate ~ H^{-1/2}", 120.0, criterion_3_multi_trajectory_rate},
      {4, "exact transition noise is N(0, Sigma)", 10.0, criterion_4_transition_distribution},
      {5, "Riccati and Lyapunov correctness", 5.0, criterion_5_riccati},
      {6, "discrete-to-continuous error transfer bound", 30.0, criterion_6_error_transfer},
      {7, "bounded normalized regret, beats the fixed stabilizer", 1200.0, criterion_7_regret},
      {8, "KL plateau across observation grids", 120.0, criterion_8_kl_plateau},
      {9, "estimator risk floor at the critical separation", 120.0, criterion_9_risk_floor},
      {10, "byte-identical outputs across reruns and thread counts", 300.0,
       criterion_10_reproducibility},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    detail_buffer[0] = '\0';
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      DETAIL("exception: %s", e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed <= c.limit_seconds;
    if (!ok || !in_time) ++failures;
    std::printf("%s criterion %2d: %s — %s (%.1fs, limit %.0fs)\n",
                ok && in_time ? "PASS" : "FAIL", c.id, c.name, detail_buffer, elapsed,
                c.limit_seconds);
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
