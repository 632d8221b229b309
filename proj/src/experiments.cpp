#include "ctlqr/experiments.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "ctlqr/csv.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/lowerbound.hpp"
#include "ctlqr/parallel.hpp"
#include "ctlqr/riccati.hpp"
#include "ctlqr/svg.hpp"
#include "ctlqr/sysid.hpp"

namespace ctlqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix uniform_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = 2.0 * rng.next_double() - 1.0;
  }
  return m;
}

Matrix rect_identity(Eigen::Index rows, Eigen::Index cols) {
  return Matrix::Identity(rows, cols);
}

Matrix realize_matrix(const MatrixSpec& spec, Eigen::Index rows, Eigen::Index cols,
                      CounterRng& rng) {
  switch (spec.rule) {
    case MatrixSpec::Rule::Uniform:
      return uniform_matrix(rng, rows, cols);
    case MatrixSpec::Rule::Stable: {
      // Uniform entries shifted to margin <= -0.5, then scaled into ||A|| <= 2
      // (scaling preserves stability).
      Matrix a = uniform_matrix(rng, rows, cols);
      a -= (stability_margin(a) + 0.5) * Matrix::Identity(rows, cols);
      const double n = spectral_norm(a);
      if (n > 2.0) a *= 2.0 / n;
      return a;
    }
    case MatrixSpec::Rule::Identity:
      return rect_identity(rows, cols);
    case MatrixSpec::Rule::Zero:
      return Matrix::Zero(rows, cols);
    case MatrixSpec::Rule::Explicit:
      return spec.value;
  }
  return Matrix();
}

struct PointStats {
  double mean = kNaN;
  double se = kNaN;
  int n = 0;
};

PointStats stats(const std::vector<double>& values) {
  PointStats out;
  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++out.n;
  }
  if (out.n == 0) return out;
  out.mean = sum / out.n;
  if (out.n > 1) {
    double var = 0.0;
    for (double v : values) {
      if (std::isnan(v)) continue;
      var += (v - out.mean) * (v - out.mean);
    }
    out.se = std::sqrt(var / (out.n - 1) / out.n);
  } else {
    out.se = 0.0;
  }
  return out;
}

struct Failure {
  std::string point;
  std::string message;
};

struct Outputs {
  std::filesystem::path dir;
  std::vector<OutputFile> files;

  void add(const std::string& name, const std::string& content) {
    csv::write_file(dir / name, content);
    files.push_back({name, csv::fnv1a64(content)});
  }
};

void write_failures(Outputs& out, const std::vector<Failure>& failures) {
  if (failures.empty()) return;
  std::string text = "point,error\n";
  for (const auto& f : failures) text += f.point + "," + f.message + "\n";
  out.add("failures.csv", text);
}

std::string sanitize_message(std::string m) {
  for (char& c : m) {
    if (c == ',' || c == '\n') c = ';';
  }
  return m;
}

// ---------------------------------------------------------------------------
// sysid experiments

struct SysidUnit {
  double errA2 = kNaN;
  double errB2 = kNaN;
  std::string error;
};

void reduce_rate_table(const std::vector<double>& grid, const std::vector<SysidUnit>& units,
                       int episodes, const char* grid_name, const char* file_stem, Outputs& out,
                       std::vector<Failure>& failures) {
  std::string table = std::string(grid_name) + ",mean_errA_F2,mean_errB_F2,se\n";
  std::vector<double> xs, ya, yb;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> a2, b2;
    for (int e = 0; e < episodes; ++e) {
      const auto& u = units[g * episodes + e];
      a2.push_back(u.errA2);
      b2.push_back(u.errB2);
      if (!u.error.empty()) {
        failures.push_back({csv::num(grid[g]) + "/" + std::to_string(e), u.error});
      }
    }
    const PointStats sa = stats(a2), sb = stats(b2);
    table += csv::num(grid[g]) + "," + csv::num(sa.mean) + "," + csv::num(sb.mean) + "," +
             csv::num(sa.se) + "\n";
    xs.push_back(grid[g]);
    ya.push_back(sa.mean);
    yb.push_back(sb.mean);
  }
  out.add(std::string(file_stem) + ".csv", table);

  std::string slopes = "quantity,slope\n";
  slopes += "mean_errA_F2," + csv::num(loglog_slope(xs, ya)) + "\n";
  slopes += "mean_errB_F2," + csv::num(loglog_slope(xs, yb)) + "\n";
  out.add(std::string(file_stem) + "_slopes.csv", slopes);

  if (xs.size() >= 2) {
    out.add(std::string(file_stem) + ".svg",
            svg::render_lineplot({{"mean ||errA||_F^2", xs, ya}, {"mean ||errB||_F^2", xs, yb}},
                                 file_stem, grid_name, "mean squared Frobenius error", true, true));
  }
}

void run_sysid_single(const ExperimentConfig& cfg, Outputs& out, std::vector<Failure>& failures) {
  const int episodes = cfg.effective_episodes();
  std::vector<SysidUnit> units(cfg.T_grid.size() * static_cast<std::size_t>(episodes));
  par::parallel_for(
      units.size(),
      [&](std::size_t i) {
        const std::size_t ti = i / episodes;
        const auto e = static_cast<std::uint64_t>(i % episodes);
        CounterRng rng(cfg.seed, {0x53494431u, ti, e});
        SysidUnit& unit = units[i];
        try {
          const GeneratedSystem gen = generate_system(cfg, rng);
          const Matrix a_stable = gen.sys.A + gen.sys.B * gen.K;
          const auto steps =
              static_cast<std::size_t>(std::ceil(cfg.T_grid[ti] / gen.h));
          NoiseModel noise{cfg.sigma, cfg.seed};
          const SampledTrajectory traj = simulate_dithered_feedback(
              gen.sys, gen.K, Vector::Zero(gen.sys.d()), steps, gen.h, noise, rng);
          const SysIdEstimate est = identify_single(traj);
          unit.errA2 = (est.Ahat - a_stable).squaredNorm();
          unit.errB2 = (est.Bhat - gen.sys.B).squaredNorm();
        } catch (const std::exception& ex) {
          unit.error = sanitize_message(ex.what());
        }
      },
      cfg.threads);
  reduce_rate_table(cfg.T_grid, units, episodes, "T", "sysid_single", out, failures);
}

void run_sysid_multi(const ExperimentConfig& cfg, Outputs& out, std::vector<Failure>& failures) {
  const int episodes = cfg.effective_episodes();
  std::vector<SysidUnit> units(cfg.H_grid.size() * static_cast<std::size_t>(episodes));
  par::parallel_for(
      units.size(),
      [&](std::size_t i) {
        const std::size_t hi = i / episodes;
        const auto e = static_cast<std::uint64_t>(i % episodes);
        CounterRng rng(cfg.seed, {0x53494432u, hi, e});
        SysidUnit& unit = units[i];
        try {
          const GeneratedSystem gen = generate_system(cfg, rng);
          const Matrix k_zero = Matrix::Zero(gen.sys.p(), gen.sys.d());
          NoiseModel noise{cfg.sigma, cfg.seed};
          MultiTrajectoryBatch batch;
          batch.trajectories.reserve(static_cast<std::size_t>(cfg.H_grid[hi]));
          for (int l = 0; l < cfg.H_grid[hi]; ++l) {
            batch.trajectories.push_back(simulate_dithered_feedback(
                gen.sys, k_zero, Vector::Zero(gen.sys.d()),
                static_cast<std::size_t>(cfg.T0), gen.h, noise, rng));
          }
          const auto [atilde, btilde] = estimate_discrete_multi(batch, 1);
          const auto [ahat, bhat] = recover_continuous(atilde, btilde, gen.h);
          unit.errA2 = (ahat - gen.sys.A).squaredNorm();
          unit.errB2 = (bhat - gen.sys.B).squaredNorm();
        } catch (const std::exception& ex) {
          unit.error = sanitize_message(ex.what());
        }
      },
      cfg.threads);

  std::vector<double> grid(cfg.H_grid.begin(), cfg.H_grid.end());
  reduce_rate_table(grid, units, episodes, "H", "sysid_multi", out, failures);
}

// ---------------------------------------------------------------------------
// online regret experiment

struct OnlineUnit {
  RegretRecord record;
  double baseline_rt = kNaN;
  bool ok = false;
  std::string error;
};

void run_online_regret(const ExperimentConfig& cfg, Outputs& out,
                       std::vector<Failure>& failures) {
  const int episodes = cfg.effective_episodes();
  std::vector<OnlineUnit> units(cfg.T_grid.size() * static_cast<std::size_t>(episodes));
  par::parallel_for(
      units.size(),
      [&](std::size_t i) {
        const std::size_t ti = i / episodes;
        const auto e = static_cast<std::uint64_t>(i % episodes);
        OnlineUnit& unit = units[i];
        CounterRng rng(cfg.seed, {0x4f4e4c31u, ti, e});
        try {
          const GeneratedSystem gen = generate_system(cfg, rng);
          OnlineConfig ocfg;
          ocfg.T = cfg.T_grid[ti];
          ocfg.h = gen.h;
          ocfg.K = gen.K;
          ocfg.weights = gen.weights;
          ocfg.kappa = gen.kappa;
          ocfg.seed = cfg.seed;
          ocfg.sigma = cfg.sigma;
          unit.record = run_episode(gen.sys, ocfg, static_cast<int>(i));
          const FiniteCostTerms k_terms = expected_cost_finite_terms(
              gen.sys, gen.weights, gen.K, Vector::Zero(gen.sys.d()), ocfg.T);
          const double j_k = k_terms.state_term + cfg.sigma * cfg.sigma * k_terms.noise_term;
          unit.baseline_rt = j_k - unit.record.JTstar;
          unit.ok = true;
        } catch (const std::exception& ex) {
          unit.error = sanitize_message(ex.what());
        }
      },
      cfg.threads);

  std::vector<RegretRecord> records;
  std::string regret = "T,mean_RT_norm,se\n";
  std::string baseline = "T,baseline_RT_norm\n";
  std::vector<double> xs, ours, base;
  for (std::size_t ti = 0; ti < cfg.T_grid.size(); ++ti) {
    const double T = cfg.T_grid[ti];
    std::vector<double> rt_norm, base_norm;
    for (int e = 0; e < episodes; ++e) {
      const auto& unit = units[ti * episodes + e];
      if (unit.ok) {
        records.push_back(unit.record);
        rt_norm.push_back(unit.record.RT / std::sqrt(T));
        base_norm.push_back(unit.baseline_rt / std::sqrt(T));
      } else {
        failures.push_back({csv::num(T) + "/" + std::to_string(e), unit.error});
      }
    }
    const PointStats so = stats(rt_norm), sb = stats(base_norm);
    regret += csv::num(T) + "," + csv::num(so.mean) + "," + csv::num(so.se) + "\n";
    baseline += csv::num(T) + "," + csv::num(sb.mean) + "\n";
    xs.push_back(T);
    ours.push_back(so.mean);
    base.push_back(sb.mean);
  }
  out.add("records.csv", regret_records_to_csv(records));
  out.add("regret.csv", regret);
  out.add("regret_baseline.csv", baseline);
  if (xs.size() >= 2) {
    out.add("regret.svg",
            svg::render_lineplot(
                {{"explore-then-commit", xs, ours}, {"fixed stabilizer", xs, base}},
                "normalized regret", "T", "R_T / sqrt(T)", true, false));
  }
}

// ---------------------------------------------------------------------------
// lower-bound study

void run_lowerbound(const ExperimentConfig& cfg, Outputs& out, std::vector<Failure>& failures) {
  const auto& lb = cfg.lowerbound;
  std::string kl_table = "N,T,delta,kl_exact,kl_mc,kl_mc_se\n";
  std::vector<svg::Series> kl_series;
  for (double T : lb.T_grid) {
    const double delta = 1.0 / (5.0 * std::sqrt(T));
    svg::Series series{"T=" + csv::num(T), {}, {}};
    for (int n : lb.N_grid) {
      try {
        const auto grid = lowerbound::ObservationGrid::uniform(T, n);
        const double exact = lowerbound::kl_exact(grid, delta);
        const auto mc = lowerbound::kl_monte_carlo(grid, delta, lb.mc_paths, cfg.seed,
                                                   cfg.threads);
        kl_table += std::to_string(n) + "," + csv::num(T) + "," + csv::num(delta) + "," +
                    csv::num(exact) + "," + csv::num(mc.mean) + "," + csv::num(mc.se) + "\n";
        series.x.push_back(n);
        series.y.push_back(exact);
      } catch (const std::exception& ex) {
        failures.push_back({"T=" + csv::num(T) + "/N=" + std::to_string(n),
                            sanitize_message(ex.what())});
      }
    }
    if (series.x.size() >= 2) kl_series.push_back(std::move(series));
  }
  out.add("lowerbound_kl.csv", kl_table);
  if (!kl_series.empty()) {
    out.add("lowerbound_kl.svg",
            svg::render_lineplot(kl_series, "KL divergence across observation grids", "N",
                                 "KL(g || gbar)", true, false));
  }

  const double delta = 1.0 / (5.0 * std::sqrt(lb.risk_T));
  const auto grid = lowerbound::ObservationGrid::uniform(lb.risk_T, lb.risk_N);
  std::string risk_table = "estimator,trials,p_err_base,p_err_alt\n";
  const std::pair<const char*, lowerbound::Estimator> estimators[] = {
      {"ml-plugin", lowerbound::make_ml_plugin(grid)},
      {"single-gap", lowerbound::make_single_gap_plugin(grid)},
      {"constant-base", lowerbound::make_constant(lowerbound::kBaseDrift)},
  };
  for (const auto& [name, estimator] : estimators) {
    const auto risk =
        lowerbound::estimator_risk(grid, delta, estimator, lb.risk_trials, cfg.seed, cfg.threads);
    risk_table += std::string(name) + "," + std::to_string(lb.risk_trials) + "," +
                  csv::num(risk.p_err_base) + "," + csv::num(risk.p_err_alt) + "\n";
  }
  out.add("lowerbound_risk.csv", risk_table);
}

}  // namespace

GeneratedSystem generate_system(const ExperimentConfig& cfg, CounterRng& rng) {
  const Eigen::Index d = cfg.system.d, p = cfg.system.p;
  GeneratedSystem gen;
  gen.sys.A = realize_matrix(cfg.system.A, d, d, rng);
  gen.sys.B = realize_matrix(cfg.system.B, d, p, rng);
  gen.weights.Q = realize_matrix(cfg.system.Q, d, d, rng);
  gen.weights.R = realize_matrix(cfg.system.R, p, p, rng);
  switch (cfg.system.K.rule) {
    case GainSpec::Rule::Auto:
      gen.K = shifted_stabilizer(gen.sys.A, gen.sys.B, spectral_norm(gen.sys.A) + 0.5);
      if (stability_margin(gen.sys.A + gen.sys.B * gen.K) >= 0.0) {
        throw NumericError("generate_system: auto stabilizer failed verification");
      }
      break;
    case GainSpec::Rule::Zero:
      gen.K = Matrix::Zero(p, d);
      break;
    case GainSpec::Rule::Explicit:
      gen.K = cfg.system.K.value;
      break;
  }
  gen.kappa = spectral_norm(gen.sys.A) + spectral_norm(gen.sys.B) * spectral_norm(gen.K);
  gen.h = cfg.h_mode == HMode::Kappa ? 1.0 / (15.0 * gen.kappa) : cfg.h;
  return gen;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return kNaN;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Outputs out;
  out.dir = cfg.out_dir;
  std::vector<Failure> failures;

  const std::string resolved = canonical_json(cfg);
  out.add("config_resolved.json", resolved);

  switch (cfg.experiment) {
    case ExperimentKind::SysidSingle:
      run_sysid_single(cfg, out, failures);
      break;
    case ExperimentKind::SysidMulti:
      run_sysid_multi(cfg, out, failures);
      break;
    case ExperimentKind::OnlineRegret:
      run_online_regret(cfg, out, failures);
      break;
    case ExperimentKind::Lowerbound:
      run_lowerbound(cfg, out, failures);
      break;
  }
  write_failures(out, failures);

  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.config_hash = csv::hex64(csv::fnv1a64(resolved));
  manifest.failed_points = static_cast<int>(failures.size());
  manifest.outputs = out.files;
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json m;
  m["tool_version"] = manifest.tool_version;
  m["config_hash"] = manifest.config_hash;
  m["wall_clock_seconds"] = manifest.wall_clock_seconds;
  m["failed_points"] = manifest.failed_points;
  m["outputs"] = nlohmann::json::array();
  for (const auto& f : manifest.outputs) {
    m["outputs"].push_back({{"file", f.name}, {"fnv1a64", csv::hex64(f.checksum)}});
  }
  csv::write_file(out.dir / "manifest.json", m.dump(2) + "\n");
  return manifest;
}

}  // namespace ctlqr
