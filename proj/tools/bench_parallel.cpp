// Times the OpenMP kernels against their serial reference on the three
// data-parallel workloads: online-control episodes, lower-bound Monte Carlo,
// and multi-trajectory Gram accumulation. Also checks that both paths give
// bit-identical results.

#include <chrono>
#include <cstdio>
#include <vector>

#include "ctlqr/config.hpp"
#include "ctlqr/experiments.hpp"
#include "ctlqr/lowerbound.hpp"
#include "ctlqr/online.hpp"
#include "ctlqr/parallel.hpp"
#include "ctlqr/sysid.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
void report(const char* name, F&& workload) {
  const auto t_serial = std::chrono::steady_clock::now();
  const auto serial = workload(1);
  const double s = seconds_since(t_serial);

  const auto t_parallel = std::chrono::steady_clock::now();
  const auto parallel = workload(0);
  const double p = seconds_since(t_parallel);

  std::printf("%-28s serial %7.3fs  openmp %7.3fs  speedup %5.2fx  identical %s\n", name, s, p,
              p > 0 ? s / p : 0.0, serial == parallel ? "yes" : "NO");
}

}  // namespace

int main() {
  using namespace ctlqr;
  std::printf("threads available: %d\n", par::max_threads());

  report("online episodes (T=2500)", [](int threads) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::OnlineRegret;
    cfg.seed = 7;
    CounterRng rng(cfg.seed, {1u});
    const GeneratedSystem gen = generate_system(cfg, rng);
    OnlineConfig ocfg;
    ocfg.T = 2500;
    ocfg.h = gen.h;
    ocfg.K = gen.K;
    ocfg.weights = gen.weights;
    ocfg.seed = cfg.seed;
    std::vector<double> rt(16);
    par::parallel_for(
        rt.size(), [&](std::size_t i) { rt[i] = run_episode(gen.sys, ocfg, (int)i).RT; },
        threads);
    return rt;
  });

  report("lower-bound MC (1e5 x 128)", [](int threads) {
    const auto grid = lowerbound::ObservationGrid::uniform(4.0, 128);
    const auto mc = lowerbound::kl_monte_carlo(grid, 0.1, 100000, 11, threads);
    return std::vector<double>{mc.mean, mc.se};
  });

  report("multi-traj Gram (H=2e5)", [](int threads) {
    ExperimentConfig cfg;
    cfg.system.A = {MatrixSpec::Rule::Stable, {}};
    cfg.system.K = {GainSpec::Rule::Zero, {}};
    CounterRng rng(13, {2u});
    const GeneratedSystem gen = generate_system(cfg, rng);
    NoiseModel noise{1.0, 13};
    MultiTrajectoryBatch batch;
    batch.trajectories.reserve(200000);
    for (int l = 0; l < 200000; ++l) {
      batch.trajectories.push_back(simulate_dithered_feedback(
          gen.sys, gen.K, Vector::Zero(gen.sys.d()), 2, gen.h, noise, rng));
    }
    const auto [atilde, btilde] = estimate_discrete_multi(batch, threads);
    std::vector<double> flat;
    for (Eigen::Index i = 0; i < atilde.size(); ++i) flat.push_back(atilde(i));
    for (Eigen::Index i = 0; i < btilde.size(); ++i) flat.push_back(btilde(i));
    return flat;
  });

  return 0;
}
