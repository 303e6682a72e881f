// rlgp command-line tool: per-query robust local GP prediction, outlier
// reporting, and synthetic benchmarks over CSV inputs.

#include <CLI11.hpp>
#include <iostream>

#include "rlgp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust local Gaussian process regression"};
  app.require_subcommand(1);

  rlgp::RunConfig cfg;

  const auto add_fit_flags = [&cfg](CLI::App* cmd) {
    cmd->add_option("--train", cfg.train_path, "training CSV (x1..xd,y)")->required();
    cmd->add_option("--test", cfg.test_path, "test CSV (x1..xd)")->required();
    cmd->add_option("--out", cfg.output_path, "output CSV path")->required();
    cmd->add_option("--neighbors", cfg.neighbors, "neighborhood size (clamped to N)");
    cmd->add_option("--q", cfg.q_spec, "trimming level: adaptive, a count, or e.g. 0.15n");
    cmd->add_option("--tau", cfg.tau, "MAD multiplier for adaptive q");
    cmd->add_option("--c0", cfg.c0, "trace weight: one or corrected");
    cmd->add_option("--seed", cfg.seed, "random seed (reserved for reproducible runs)");
    cmd->add_flag("--scale", cfg.scale, "min-max scale features to [0,1]");
    cmd->add_option("--workers", cfg.workers, "worker threads (default: logical cores)");
    cmd->add_option("--tol-outer", cfg.tol_outer, "outer loop relative tolerance");
    cmd->add_option("--tol-gamma", cfg.tol_gamma, "inner gamma loop tolerance");
    cmd->add_flag("--no-timings", [&cfg](std::int64_t) { cfg.timings = false; },
                  "write zeros to timing columns (for byte-identical reruns)");
  };

  CLI::App* predict = app.add_subcommand("predict", "posterior mean/variance per test point");
  add_fit_flags(predict);

  CLI::App* outliers = app.add_subcommand("outliers", "flagged training rows per test point");
  add_fit_flags(outliers);

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark config");
  bench->add_option("--config", cfg.config_path, "key=value benchmark config file")->required();
  bench->add_option("--out", cfg.output_path, "report CSV path")->required();
  bench->add_flag("--no-timings", [&cfg](std::int64_t) { cfg.timings = false; },
                  "write zeros to timing columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rlgp::cli::kExitConfig;
  }

  if (predict->parsed()) return rlgp::run_predict(cfg, std::cerr);
  if (outliers->parsed()) return rlgp::run_outliers(cfg, std::cerr);
  return rlgp::run_bench(cfg, std::cerr, std::cout);
}
