#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "semwt/errors.hpp"
#include "semwt/expcli.hpp"
#include "semwt/textio.hpp"

using namespace semwt;
using namespace semwt::expcli;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string temp_dir(const std::string& leaf) {
  const auto p = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

// Small but complete experiment used by the end-to-end subcases.
ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.train_count = 64;
  cfg.test_count = 8;
  cfg.epsilon_grid = {1.0, 100.0};
  cfg.snr_grid_db = {10.0, 20.0};
  cfg.stage1_epochs = 4;
  cfg.stage2_epochs = 2;
  cfg.sched_period0 = 2;
  cfg.out_dir = out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("config: emit/parse round trip preserves every field") {
  const ExperimentConfig def;
  CHECK(parse_config(emit_config(def)) == def);

  ExperimentConfig cfg;
  cfg.seed = 42;
  cfg.epsilon_grid = {0.5, 2.25, 19.0};
  cfg.snr_grid_db = {-3.0, 7.5};
  cfg.lambda = 0.0012345678901234567;
  cfg.threat = "stronger";
  cfg.private_indices = {0, 1, 2, 3, 4, 5};
  cfg.eve_guess_indices = {0, 1, 6, 7};
  cfg.run_direct = false;
  cfg.out_dir = "elsewhere/nested";
  CHECK(parse_config(emit_config(cfg)) == cfg);
}

TEST_CASE("config: unknown keys and malformed lines are hard errors") {
  CHECK_THROWS_AS(parse_config("no_such_key = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("= 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epsilon_grid = \n"), ConfigError);
  CHECK_THROWS_AS(parse_config("threat = weird\n"), ConfigError);
  // Comments and blank lines are fine.
  CHECK_NOTHROW(parse_config("# comment\n\n  seed = 9\n"));
}

TEST_CASE("config: stronger preset widens the private set unless pinned") {
  const ExperimentConfig widened = parse_config("threat = stronger\n");
  CHECK(widened.private_indices == std::vector<int>{0, 1, 4, 5, 6, 7});

  const ExperimentConfig pinned =
      parse_config("threat = stronger\nprivate_indices = 0,1,2,3,4,5\n");
  CHECK(pinned.private_indices == std::vector<int>{0, 1, 2, 3, 4, 5});

  const ExperimentConfig basic = parse_config("threat = basic\n");
  CHECK(basic.private_indices == std::vector<int>{0, 1, 4, 5});
}

TEST_CASE("config: stage-2 epochs default to half of stage 1") {
  CHECK(parse_config("stage1_epochs = 40\n").stage2_epochs == 20);
  CHECK(parse_config("stage1_epochs = 40\nstage2_epochs = 7\n").stage2_epochs ==
        7);
  CHECK(parse_config("stage1_epochs = 1\n").stage2_epochs == 1);
}

TEST_CASE("config: validation catches inconsistent setups") {
  ExperimentConfig cfg;
  cfg.obs_dim = 95;  // not a multiple of the 3 generator groups
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.epsilon_grid = {1.0, -2.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.private_indices = {1, 4, 5};  // drops shared code 0
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("gendata: deterministic files with disjoint identity ranges") {
  const std::string dir = temp_dir("semwt_expcli_gendata");
  ExperimentConfig cfg = tiny_config(dir);
  run_gendata(cfg);
  const std::string train_a = read_file(train_path(cfg));
  const std::string test_a = read_file(test_path(cfg));
  run_gendata(cfg);
  CHECK(read_file(train_path(cfg)) == train_a);
  CHECK(read_file(test_path(cfg)) == test_a);

  const auto spec = cfg.partition();
  const toygen::Dataset train = toygen::load_dataset(train_path(cfg), spec);
  const toygen::Dataset test = toygen::load_dataset(test_path(cfg), spec);
  REQUIRE(train.size() == 64);
  REQUIRE(test.size() == 8);
  CHECK(train.records.front().identity == 0);
  CHECK(train.records.back().identity == 63);
  CHECK(test.records.front().identity == 64);  // offset past the train split
  CHECK(test.records.back().identity == 71);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train/sweep/report: a tiny end-to-end experiment") {
  const std::string dir = temp_dir("semwt_expcli_e2e");
  ExperimentConfig cfg = tiny_config(dir);
  run_gendata(cfg);
  const std::string ckpt_path = dir + "/model.ckpt";
  const Checkpoint ckpt = run_train(cfg, ckpt_path);

  SUBCASE("checkpoint text round trip is bit-exact") {
    const Checkpoint loaded = load_checkpoint(ckpt_path);
    CHECK(loaded.kind == ckpt.kind);
    CHECK(loaded.tau == ckpt.tau);
    CHECK(loaded.bounds.lo == ckpt.bounds.lo);
    CHECK(loaded.bounds.hi == ckpt.bounds.hi);
    REQUIRE(loaded.models.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
      const auto& a = ckpt.models[e];
      const auto& b = loaded.models[e];
      CHECK(b.epsilon == a.epsilon);
      CHECK(b.mech.scale == a.mech.scale);
      REQUIRE(b.stage1.protection.weight.size() ==
              a.stage1.protection.weight.size());
      for (std::size_t i = 0; i < a.stage1.protection.weight.size(); ++i) {
        CHECK(b.stage1.protection.weight[i] == a.stage1.protection.weight[i]);
      }
      REQUIRE(b.denoiser.has_value());
      for (std::size_t i = 0; i < a.denoiser->weight.size(); ++i) {
        CHECK(b.denoiser->weight[i] == a.denoiser->weight[i]);
      }
    }
    // Saving the loaded checkpoint reproduces the file byte-for-byte.
    const std::string again = dir + "/model2.ckpt";
    save_checkpoint(loaded, again);
    CHECK(read_file(again) == read_file(ckpt_path));
  }

  SUBCASE("history file has the expected shape and is reproducible") {
    const std::string hist = read_file(dir + "/history.csv");
    std::istringstream in(hist);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "epsilon,stage,epoch,disc_loss,legit_loss,mse_term,adv_term,"
          "disc_accuracy,eve_loss");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == 2 * 4);  // two epsilons x four stage-1 epochs (basic threat)

    const Checkpoint again = run_train(cfg, dir + "/model3.ckpt");
    CHECK(read_file(dir + "/history.csv") == hist);
    CHECK(read_file(dir + "/model3.ckpt") == read_file(ckpt_path));
    (void)again;
  }

  SUBCASE("sweep emits the full sorted grid and pins direct across epsilon") {
    const std::string results = dir + "/results.csv";
    const std::vector<ResultRow> rows = run_sweep(cfg, ckpt, results, 2);
    // 2 SNRs x [2 eps x (proposed + traditional_dp) + direct] x 2 roles.
    CHECK(rows.size() == 2 * (2 * 2 + 1 * 2) * 2);
    // Sorted by (scheme, threat, epsilon, snr, role).
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto key = [](const ResultRow& r) {
        return std::make_tuple(r.scheme, r.threat, r.epsilon, r.snr_db, r.role);
      };
      CHECK(key(rows[i - 1]) <= key(rows[i]));
    }
    // Direct rows ignore epsilon entirely: identical values at fixed
    // (snr, role) across the epsilon grid.
    for (const ResultRow& a : rows) {
      if (a.scheme != "direct" || a.epsilon != 1.0) continue;
      bool found = false;
      for (const ResultRow& b : rows) {
        if (b.scheme == "direct" && b.epsilon == 100.0 &&
            b.snr_db == a.snr_db && b.role == a.role) {
          found = true;
          CHECK(b.latent_mse == a.latent_mse);
          CHECK(b.obs_mse == a.obs_mse);
          CHECK(b.privacy_rate == a.privacy_rate);
        }
      }
      CHECK(found);
    }
    // File round trip and byte-stable re-run.
    const std::vector<ResultRow> loaded = load_results(results);
    REQUIRE(loaded.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(loaded[i].latent_mse == rows[i].latent_mse);
      CHECK(loaded[i].n == rows[i].n);
    }
    const std::string bytes = read_file(results);
    run_sweep(cfg, ckpt, results, 1);  // single-threaded must match
    CHECK(read_file(results) == bytes);

    // Report output: curve files with sorted x per curve.
    run_report(results, dir + "/report");
    for (const std::string leaf : {"epsilon_curves.csv", "snr_curves.csv"}) {
      const std::string text = read_file(dir + "/report/" + leaf);
      std::istringstream in(text);
      std::string line;
      REQUIRE(std::getline(in, line));
      CHECK(line == "curve,x,y,stderr");
      std::string prev_curve;
      double prev_x = 0.0;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const std::string curve = line.substr(0, c1);
        const double x = parse_double(line.substr(c1 + 1, c2 - c1 - 1));
        if (curve == prev_curve) CHECK(x >= prev_x);
        prev_curve = curve;
        prev_x = x;
      }
    }
  }

  std::filesystem::remove_all(dir);
}

TEST_CASE("load_results rejects a schema missing a column, by name") {
  const std::string dir = temp_dir("semwt_expcli_schema");
  const std::string path = dir + "/bad.csv";
  {
    std::ofstream out(path, std::ios::binary);
    out << "scheme,threat,epsilon,snr_db,role,latent_mse,latent_mse_se,"
           "obs_mse,obs_mse_se,n\n";  // privacy_rate missing
  }
  try {
    load_results(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("privacy_rate") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}
