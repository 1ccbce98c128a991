#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "semwt/errors.hpp"
#include "semwt/expcli.hpp"
#include "semwt/metrics.hpp"
#include "semwt/textio.hpp"

namespace semwt::expcli {

std::string train_path(const ExperimentConfig& config) {
  return config.out_dir + "/train.txt";
}

std::string test_path(const ExperimentConfig& config) {
  return config.out_dir + "/test.txt";
}

toygen::GeneratorParams make_generator(const ExperimentConfig& config) {
  return toygen::GeneratorParams::pretrained(
      config.partition(), config.obs_dim,
      stream_id(config.seed, "toygen/pretrained"));
}

void run_gendata(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  const toygen::GeneratorParams gen = make_generator(config);
  const toygen::Dataset train = toygen::sample_dataset(
      config.train_count, 0, gen, stream_id(config.seed, "data/train"));
  const toygen::Dataset test = toygen::sample_dataset(
      config.test_count, config.train_count, gen,
      stream_id(config.seed, "data/test"));
  toygen::save_dataset(train, train_path(config));
  toygen::save_dataset(test, test_path(config));
}

namespace {

std::vector<toygen::LatentCodes> dataset_latents(const toygen::Dataset& ds) {
  std::vector<toygen::LatentCodes> out;
  out.reserve(ds.size());
  for (const toygen::DatasetRecord& r : ds.records) out.push_back(r.latents);
  return out;
}

std::string history_header() {
  return "epsilon,stage,epoch,disc_loss,legit_loss,mse_term,adv_term,"
         "disc_accuracy,eve_loss";
}

std::string history_row(double epsilon, const wiretap::TrainHistoryRow& row) {
  std::ostringstream out;
  out << format_double(epsilon) << "," << row.stage << "," << row.epoch << ","
      << format_double(row.stats.disc_loss) << ","
      << format_double(row.stats.legit_loss) << ","
      << format_double(row.stats.mse_term) << ","
      << format_double(row.stats.adv_term) << ","
      << format_double(row.stats.disc_accuracy) << ","
      << format_double(row.eve_loss);
  return out.str();
}

}  // namespace

Checkpoint run_train(const ExperimentConfig& config,
                     const std::string& checkpoint_path) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const toygen::PartitionSpec spec = config.partition();
  const toygen::GeneratorParams gen = make_generator(config);
  const toygen::Dataset train_ds =
      toygen::load_dataset(train_path(config), spec);
  const std::vector<toygen::LatentCodes> train_latents =
      dataset_latents(train_ds);

  // Clip bounds from the pooled training latents; sensitivity is over the
  // private-code element count.
  const dpmech::ClipBounds bounds = dpmech::fit_clip_bounds(
      train_latents, config.clip_lo_quantile, config.clip_hi_quantile);
  const int sens_n = spec.private_count() * spec.code_dim;

  Checkpoint ckpt;
  ckpt.kind = config.threat_kind();
  ckpt.gen_seed = stream_id(config.seed, "toygen/pretrained");
  ckpt.obs_dim = config.obs_dim;
  ckpt.spec = spec;
  ckpt.eve_spec = config.eve_partition();
  ckpt.bounds = bounds;
  ckpt.train_snr_db = config.train_snr_db;
  ckpt.power = config.power;
  ckpt.invert_iters = config.invert_iters;
  ckpt.invert_eta = config.invert_eta;

  // Threshold calibration, once per generator seed, on a training subset.
  {
    const std::size_t count =
        std::min<std::size_t>(train_latents.size(), 128);
    const std::vector<toygen::LatentCodes> subset(
        train_latents.begin(),
        train_latents.begin() + static_cast<std::ptrdiff_t>(count));
    ckpt.tau = metrics::calibrate_tau(subset, gen, config.invert_iters,
                                      config.invert_eta, config.tau_quantile);
  }

  std::ostringstream history;
  history << history_header() << "\n";

  wiretap::TrainSettings settings;
  settings.trainer = config.trainer_config();
  settings.stage1_epochs = config.stage1_epochs;
  settings.stage2_epochs = config.stage2_epochs;

  for (double epsilon : config.epsilon_grid) {
    EpsilonModels em;
    em.epsilon = epsilon;
    em.mech = dpmech::PrivacyMechanism::from_bounds(bounds, sens_n, epsilon);

    wiretap::SystemBundle bundle;
    bundle.generator = gen;
    bundle.spec = spec;
    bundle.bounds = bounds;
    bundle.mech = em.mech;
    bundle.legit_channel = {config.power, config.train_snr_db};
    bundle.eve_channel = {config.power, config.train_snr_db};
    bundle.threat.kind = ckpt.kind;
    bundle.threat.eve_guessed_partition = ckpt.eve_spec;
    bundle.power = config.power;
    bundle.invert_iters = config.invert_iters;
    bundle.invert_eta = config.invert_eta;

    wiretap::TrainResult result =
        ckpt.kind == wiretap::ThreatKind::kBasic
            ? wiretap::train_basic(bundle, train_latents, settings)
            : wiretap::train_stronger(bundle, train_latents, settings);
    for (const wiretap::TrainHistoryRow& row : result.history) {
      history << history_row(epsilon, row) << "\n";
    }

    if (ckpt.kind == wiretap::ThreatKind::kStronger) {
      // Stage-1 snapshot holds the legitimate system as frozen at the end of
      // stage 1; stage 2 adds Eve's net on top of the same parameters.
      em.stage2 = result.models;
      em.stage1 = result.models;
      em.stage1.deprotection_eve.reset();
    } else {
      em.stage1 = result.models;
    }

    if (config.run_traditional_dp) {
      em.denoiser = wiretap::train_dp_denoiser(bundle, train_latents, settings);
    }
    ckpt.models.push_back(std::move(em));
  }

  {
    const std::string path = config.out_dir + "/history.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write history: " + path);
    out << history.str();
  }
  save_checkpoint(ckpt, checkpoint_path);
  return ckpt;
}

std::string format_result_row(const ResultRow& row) {
  std::ostringstream out;
  out << row.scheme << "," << row.threat << "," << format_double(row.epsilon)
      << "," << format_double(row.snr_db) << "," << row.role << ","
      << format_double(row.latent_mse) << ","
      << format_double(row.latent_mse_se) << "," << format_double(row.obs_mse)
      << "," << format_double(row.obs_mse_se) << ","
      << format_double(row.privacy_rate) << "," << row.n;
  return out.str();
}

namespace {

struct CellOutput {
  ResultRow bob;
  ResultRow eve;
};

// Evaluates one (scheme, epsilon, snr) cell over the whole test split with
// one noise draw per sample per link, then aggregates.
CellOutput eval_cell(const std::string& scheme, const std::string& label,
                     double epsilon, double snr_db,
                     const std::vector<toygen::LatentCodes>& test_latents,
                     const Checkpoint& ckpt, const EpsilonModels& em,
                     const toygen::GeneratorParams& gen, std::uint64_t seed) {
  wiretap::SystemBundle bundle;
  bundle.generator = gen;
  bundle.spec = ckpt.spec;
  bundle.bounds = ckpt.bounds;
  bundle.mech = em.mech;
  bundle.legit_channel = {ckpt.power, snr_db};
  bundle.eve_channel = {ckpt.power, snr_db};
  bundle.threat.kind = ckpt.kind;
  bundle.threat.eve_guessed_partition = ckpt.eve_spec;
  bundle.power = ckpt.power;
  bundle.invert_iters = ckpt.invert_iters;
  bundle.invert_eta = ckpt.invert_eta;
  bundle.models = em.stage2 ? *em.stage2 : em.stage1;
  if (scheme == "traditional_dp" && !em.denoiser) {
    throw ConfigError("checkpoint has no traditional-DP denoiser");
  }

  Rng bob_rng(stream_id(seed, label + "/bob"));
  Rng eve_rng(stream_id(seed, label + "/eve"));
  Rng dp_rng(stream_id(seed, label + "/dp"));

  std::vector<double> bob_lat, bob_obs, eve_lat, eve_obs;
  std::vector<Tensor> bob_recons, eve_recons;
  for (const toygen::LatentCodes& z : test_latents) {
    wiretap::SampleEval ev;
    if (scheme == "proposed") {
      ev = wiretap::eval_proposed(z, bundle, bob_rng, eve_rng);
    } else if (scheme == "direct") {
      ev = wiretap::eval_direct(z, bundle, bob_rng, eve_rng);
    } else {
      ev = wiretap::eval_traditional_dp(z, bundle, *em.denoiser, dp_rng,
                                        bob_rng, eve_rng);
    }
    bob_lat.push_back(ev.bob_latent_mse);
    bob_obs.push_back(ev.bob_obs_mse);
    eve_lat.push_back(ev.eve_latent_mse);
    eve_obs.push_back(ev.eve_obs_mse);
    bob_recons.push_back(std::move(ev.bob_obs));
    eve_recons.push_back(std::move(ev.eve_obs));
  }
  const std::vector<double> bob_dist = metrics::identity_distances(
      bob_recons, test_latents, gen, ckpt.invert_iters, ckpt.invert_eta);
  const std::vector<double> eve_dist = metrics::identity_distances(
      eve_recons, test_latents, gen, ckpt.invert_iters, ckpt.invert_eta);

  const std::string threat =
      ckpt.kind == wiretap::ThreatKind::kBasic ? "basic" : "stronger";
  const auto make_row = [&](const std::string& role,
                            const std::vector<double>& lat,
                            const std::vector<double>& obs,
                            const std::vector<double>& dist) {
    ResultRow row;
    row.scheme = scheme;
    row.threat = threat;
    row.epsilon = epsilon;
    row.snr_db = snr_db;
    row.role = role;
    const metrics::Aggregate la = metrics::aggregate(lat);
    const metrics::Aggregate oa = metrics::aggregate(obs);
    row.latent_mse = la.mean;
    row.latent_mse_se = la.se;
    row.obs_mse = oa.mean;
    row.obs_mse_se = oa.se;
    row.privacy_rate = metrics::privacy_success_rate(dist, ckpt.tau);
    row.n = lat.size();
    return row;
  };
  CellOutput out;
  out.bob = make_row("bob", bob_lat, bob_obs, bob_dist);
  out.eve = make_row("eve", eve_lat, eve_obs, eve_dist);
  return out;
}

struct CellTask {
  std::string scheme;
  std::string label;       // RNG stream label; excludes epsilon for direct
  double epsilon = 0.0;    // representative epsilon for the evaluation
  double snr_db = 0.0;
  std::vector<double> emit_epsilons;  // rows emitted (direct: whole grid)
};

bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.scheme, a.threat, a.epsilon, a.snr_db, a.role) <
         std::tie(b.scheme, b.threat, b.epsilon, b.snr_db, b.role);
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& config,
                                 const Checkpoint& ckpt,
                                 const std::string& results_path, int jobs) {
  config.validate();
  const toygen::GeneratorParams gen = make_generator(config);
  const toygen::Dataset test_ds = toygen::load_dataset(test_path(config),
                                                       ckpt.spec);
  const std::vector<toygen::LatentCodes> test_latents =
      dataset_latents(test_ds);

  std::vector<CellTask> tasks;
  for (std::size_t j = 0; j < config.snr_grid_db.size(); ++j) {
    const double snr = config.snr_grid_db[j];
    for (std::size_t i = 0; i < config.epsilon_grid.size(); ++i) {
      const double eps = config.epsilon_grid[i];
      // Noise streams deliberately omit the epsilon index: the per-sample
      // draw counts do not depend on epsilon, so this pairs the channel (and
      // unit Laplace) noise across the epsilon grid — common random numbers
      // for the epsilon-trend comparisons — while each cell still reproduces
      // bit-exactly in isolation.
      CellTask proposed{
          "proposed", "sweep/proposed/s" + std::to_string(j), eps, snr, {eps}};
      tasks.push_back(std::move(proposed));
      if (config.run_traditional_dp) {
        CellTask trad{"traditional_dp",
                      "sweep/traditional_dp/s" + std::to_string(j),
                      eps,
                      snr,
                      {eps}};
        tasks.push_back(std::move(trad));
      }
    }
    if (config.run_direct) {
      // The direct scheme ignores epsilon, so one evaluation per SNR serves
      // the whole epsilon grid; its RNG stream omits the epsilon index so a
      // single cell re-run reproduces the same values.
      CellTask direct{"direct", "sweep/direct/s" + std::to_string(j),
                      config.epsilon_grid.front(), snr, config.epsilon_grid};
      tasks.push_back(std::move(direct));
    }
  }

  std::vector<std::vector<ResultRow>> cell_rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mu;
  const auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size() || failed.load()) return;
      const CellTask& task = tasks[t];
      try {
        const EpsilonModels& em = ckpt.for_epsilon(task.epsilon);
        const CellOutput out =
            eval_cell(task.scheme, task.label, task.epsilon, task.snr_db,
                      test_latents, ckpt, em, gen, config.seed);
        for (double eps : task.emit_epsilons) {
          ResultRow bob = out.bob;
          ResultRow eve = out.eve;
          bob.epsilon = eps;
          eve.epsilon = eps;
          cell_rows[t].push_back(std::move(bob));
          cell_rows[t].push_back(std::move(eve));
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mu);
        failed.store(true);
        failure = e.what();
        return;
      }
    }
  };
  const int n_workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (failed.load()) throw IoError("sweep failed: " + failure);

  std::vector<ResultRow> rows;
  for (std::vector<ResultRow>& cell : cell_rows) {
    for (ResultRow& row : cell) rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), row_less);

  std::ofstream out(results_path, std::ios::binary);
  if (!out) throw IoError("cannot write results: " + results_path);
  out << kResultsHeader << "\n";
  for (const ResultRow& row : rows) out << format_result_row(row) << "\n";
  return rows;
}

std::vector<ResultRow> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("results: empty file");
  // Schema check: every expected column present, by name.
  {
    std::vector<std::string> got;
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) got.push_back(col);
    const std::vector<std::string> expected = {
        "scheme",     "threat",       "epsilon",    "snr_db",
        "role",       "latent_mse",   "latent_mse_se", "obs_mse",
        "obs_mse_se", "privacy_rate", "n"};
    for (const std::string& name : expected) {
      if (std::find(got.begin(), got.end(), name) == got.end()) {
        throw ConfigError("results: missing column " + name);
      }
    }
  }
  std::vector<ResultRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 11) {
      throw IoError("results: bad row with " +
                    std::to_string(fields.size()) + " fields");
    }
    ResultRow row;
    row.scheme = fields[0];
    row.threat = fields[1];
    row.epsilon = parse_double(fields[2]);
    row.snr_db = parse_double(fields[3]);
    row.role = fields[4];
    row.latent_mse = parse_double(fields[5]);
    row.latent_mse_se = parse_double(fields[6]);
    row.obs_mse = parse_double(fields[7]);
    row.obs_mse_se = parse_double(fields[8]);
    row.privacy_rate = parse_double(fields[9]);
    try {
      std::size_t pos = 0;
      row.n = static_cast<std::size_t>(std::stoull(fields[10], &pos));
      if (pos != fields[10].size()) {
        throw IoError("results: bad sample count " + fields[10]);
      }
    } catch (const std::logic_error&) {
      throw IoError("results: bad sample count " + fields[10]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void run_report(const std::string& results_path, const std::string& out_dir) {
  const std::vector<ResultRow> rows = load_results(results_path);
  std::filesystem::create_directories(out_dir);

  struct CurvePoint {
    double x;
    double y;
    double se;
  };
  const auto emit_file = [&](const std::string& path,
                             std::map<std::string, std::vector<CurvePoint>>&
                                 curves) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report file: " + path);
    out << "curve,x,y,stderr\n";
    for (auto& [curve, points] : curves) {
      std::sort(points.begin(), points.end(),
                [](const CurvePoint& a, const CurvePoint& b) {
                  return a.x < b.x;
                });
      for (const CurvePoint& p : points) {
        out << curve << "," << format_double(p.x) << "," << format_double(p.y)
            << "," << format_double(p.se) << "\n";
      }
    }
  };

  // Long-form curves for the epsilon sweeps and the SNR sweeps, one output
  // row per (input row, metric); each input row lands in exactly one curve
  // per metric within each file.
  std::map<std::string, std::vector<CurvePoint>> eps_curves;
  std::map<std::string, std::vector<CurvePoint>> snr_curves;
  for (const ResultRow& r : rows) {
    const std::string base = r.scheme + "|" + r.threat + "|" + r.role + "|";
    const auto add = [&](const std::string& metric, double y, double se) {
      eps_curves[metric + "|" + base + "snr" + format_double(r.snr_db)]
          .push_back({r.epsilon, y, se});
      snr_curves[metric + "|" + base + "eps" + format_double(r.epsilon)]
          .push_back({r.snr_db, y, se});
    };
    add("latent_mse", r.latent_mse, r.latent_mse_se);
    add("obs_mse", r.obs_mse, r.obs_mse_se);
    add("privacy_rate", r.privacy_rate, 0.0);
  }
  emit_file(out_dir + "/epsilon_curves.csv", eps_curves);
  emit_file(out_dir + "/snr_curves.csv", snr_curves);
}

}  // namespace semwt::expcli
