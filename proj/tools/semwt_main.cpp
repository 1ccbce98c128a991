// semwt: dataset generation, training, evaluation sweeps, and report
// emission for the wiretap-channel privacy simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 training divergence,
// 4 I/O error.
#include <cstdio>
#include <exception>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "semwt/errors.hpp"
#include "semwt/expcli.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir;
  int jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

semwt::expcli::ExperimentConfig load(const CommonOpts& opts) {
  semwt::expcli::ExperimentConfig cfg =
      opts.config_path.empty() ? semwt::expcli::ExperimentConfig{}
                               : semwt::expcli::load_config(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wiretap-channel privacy simulator"};
  app.require_subcommand(1);

  CommonOpts opts;
  const auto add_common = [&](CLI::App* sub, bool with_checkpoint) {
    sub->add_option("--config", opts.config_path, "experiment config file");
    sub->add_option("--out", opts.out_dir, "output directory override");
    sub->add_option("--jobs", opts.jobs, "worker count (0 = hardware)");
    sub->add_option("--seed", opts.seed, "master seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    if (with_checkpoint) {
      sub->add_option("--checkpoint", opts.checkpoint_path, "checkpoint path");
    }
  };

  CLI::App* gendata = app.add_subcommand("gendata", "generate train/test data");
  add_common(gendata, false);
  CLI::App* train = app.add_subcommand("train", "train per-epsilon models");
  add_common(train, true);
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate the (eps, SNR) grid");
  add_common(sweep, true);
  CLI::App* report = app.add_subcommand("report", "emit plot-data curves");
  std::string results_path;
  report->add_option("--results", results_path, "results CSV from sweep")
      ->required();
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gendata->parsed()) {
      semwt::expcli::run_gendata(load(opts));
    } else if (train->parsed()) {
      const semwt::expcli::ExperimentConfig cfg = load(opts);
      const std::string ckpt_path = opts.checkpoint_path.empty()
                                        ? cfg.out_dir + "/checkpoint.txt"
                                        : opts.checkpoint_path;
      semwt::expcli::run_train(cfg, ckpt_path);
    } else if (sweep->parsed()) {
      const semwt::expcli::ExperimentConfig cfg = load(opts);
      const std::string ckpt_path = opts.checkpoint_path.empty()
                                        ? cfg.out_dir + "/checkpoint.txt"
                                        : opts.checkpoint_path;
      const semwt::expcli::Checkpoint ckpt =
          semwt::expcli::load_checkpoint(ckpt_path);
      int jobs = opts.jobs;
      if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) jobs = 1;
      }
      semwt::expcli::run_sweep(cfg, ckpt, cfg.out_dir + "/results.csv", jobs);
    } else if (report->parsed()) {
      const semwt::expcli::ExperimentConfig cfg = load(opts);
      semwt::expcli::run_report(results_path, cfg.out_dir);
    }
  } catch (const semwt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const semwt::TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const semwt::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  return 0;
}
