#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "ctlqr/config.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/experiments.hpp"

namespace {

int thread_override(int cli_threads) {
  if (const char* env = std::getenv("CTLQR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 0) return static_cast<int>(v);
    std::fprintf(stderr, "warning: ignoring malformed CTLQR_THREADS='%s'\n", env);
  }
  return cli_threads;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time LQR identification and online-control experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = -1;
  bool seed_set = false;

  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--threads", threads, "worker threads (0 = all cores)");

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
  validate->add_option("--config", config_path, "JSON experiment config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ctlqr::ExperimentConfig cfg = ctlqr::parse_config(config_path);
    if (app.got_subcommand(validate)) {
      std::printf("ok: %s\n", ctlqr::experiment_name(cfg.experiment));
      return 0;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_set) cfg.seed = seed;
    if (threads >= 0) cfg.threads = threads;
    cfg.threads = thread_override(cfg.threads);

    const ctlqr::RunManifest manifest = ctlqr::run_experiment(cfg);
    std::printf("wrote %zu files to %s in %.2fs (config %s)\n", manifest.outputs.size(),
                cfg.out_dir.c_str(), manifest.wall_clock_seconds, manifest.config_hash.c_str());
    if (manifest.failed_points > 0) {
      std::fprintf(stderr, "%d experiment point(s) failed; see failures.csv\n",
                   manifest.failed_points);
      return 3;
    }
    return 0;
  } catch (const ctlqr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
