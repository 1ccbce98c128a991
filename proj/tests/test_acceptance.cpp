// Acceptance suite for the wiretap-privacy simulator.  Runs nine checks and
// prints exactly one PASS/FAIL line per criterion; exits nonzero if any fail.
//
// Usage: test_acceptance <path-to-semwt_cli>
// The CLI binary is exercised by criterion 9 (byte-level reproducibility).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "semwt/autodiff.hpp"
#include "semwt/channel.hpp"
#include "semwt/dpmech.hpp"
#include "semwt/expcli.hpp"
#include "semwt/metrics.hpp"
#include "semwt/shield.hpp"
#include "semwt/textio.hpp"
#include "semwt/toygen.hpp"
#include "semwt/wiretap.hpp"

using namespace semwt;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL",
              criterion, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fresh_dir(const std::string& leaf) {
  const auto p = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

// ---------------------------------------------------------------------------
// Criterion 1: finite-difference gradient checks over every training loss and
// the inversion objective.  Tolerance pinned at 1e-4 over 100 random points.

Tape::Id tape_disc(Tape& tape, Tape::Id batch, Tape::Id w1, Tape::Id b1,
                   Tape::Id w2, Tape::Id b2) {
  const auto h = tape.sigmoid(tape.affine(batch, w1, b1));
  return tape.clamp(tape.sigmoid(tape.affine(h, w2, b2)),
                    shield::kDiscOutputClamp, 1.0 - shield::kDiscOutputClamp);
}

Tape::Id tape_log_one_minus(Tape& tape, Tape::Id d_out) {
  const auto ones = tape.input(Tensor::full(tape.value(d_out).shape(), 1.0));
  return tape.log(tape.add(ones, tape.scale(d_out, -1.0)));
}

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr double kTol = 1e-4;
  constexpr int kPoints = 100;

  toygen::PartitionSpec spec;
  spec.total_codes = 5;
  spec.code_dim = 3;
  spec.shared_count = 1;
  spec.private_indices = {0, 2};
  const toygen::GeneratorParams gen =
      toygen::GeneratorParams::pretrained(spec, 12, 41);
  const Tensor gen_w = gen.full_matrix();
  const Tensor gen_b = gen.full_bias();

  Rng rng(4242);
  double worst = 0.0;
  for (int point = 0; point < kPoints; ++point) {
    const shield::Discriminator d = shield::Discriminator::init(4, rng, 6);
    const Tensor z1 = testhelp::random_tensor({5, 4}, rng);
    const Tensor z2 = testhelp::random_tensor({5, 4}, rng);
    const Tensor z = testhelp::random_tensor({5, 4}, rng);
    const Tensor s1 = testhelp::random_tensor({5, 4}, rng);
    double err = 0.0;

    switch (point % 5) {
      case 0: {  // discriminator loss w.r.t. its first-layer weights
        const auto eval = [&](const Tensor& w1v, Tensor* grad) {
          Tape tape;
          const auto w1 = tape.input(w1v);
          const auto b1 = tape.input(d.b1);
          const auto w2 = tape.input(d.w2);
          const auto b2 = tape.input(d.b2);
          const auto d1 = tape_disc(tape, tape.input(z1), w1, b1, w2, b2);
          const auto d2 = tape_disc(tape, tape.input(z2), w1, b1, w2, b2);
          const auto loss = tape.add(
              tape.scale(tape.mean(tape.log(d1)), -1.0),
              tape.scale(tape.mean(tape_log_one_minus(tape, d2)), -1.0));
          if (grad != nullptr) {
            tape.backward(loss);
            *grad = tape.grad(w1);
          }
          return tape.value(loss)[0];
        };
        Tensor grad;
        eval(d.w1, &grad);
        err = testhelp::max_grad_rel_error(
            [&](const Tensor& w) { return eval(w, nullptr); }, d.w1, grad);
        break;
      }
      case 1: {  // generator-side adversarial loss w.r.t. the protected batch
        const auto eval = [&](const Tensor& z2v, Tensor* grad) {
          Tape tape;
          const auto zi = tape.input(z2v);
          const auto dout =
              tape_disc(tape, zi, tape.input(d.w1), tape.input(d.b1),
                        tape.input(d.w2), tape.input(d.b2));
          const auto loss = tape.mean(tape_log_one_minus(tape, dout));
          if (grad != nullptr) {
            tape.backward(loss);
            *grad = tape.grad(zi);
          }
          return tape.value(loss)[0];
        };
        Tensor grad;
        eval(z2, &grad);
        err = testhelp::max_grad_rel_error(
            [&](const Tensor& v) { return eval(v, nullptr); }, z2, grad);
        break;
      }
      case 2: {  // composite legitimate loss w.r.t. the decoded latents
        const double lambda = 1e-3;
        const auto eval = [&](const Tensor& s1v, Tensor* grad) {
          Tape tape;
          const auto si = tape.input(s1v);
          const auto mse = tape.mean(tape.sqdiff(tape.input(z), si));
          const auto dout =
              tape_disc(tape, tape.input(z2), tape.input(d.w1),
                        tape.input(d.b1), tape.input(d.w2), tape.input(d.b2));
          const auto adv = tape.mean(tape_log_one_minus(tape, dout));
          const auto loss = tape.add(mse, tape.scale(adv, lambda));
          if (grad != nullptr) {
            tape.backward(loss);
            *grad = tape.grad(si);
          }
          return tape.value(loss)[0];
        };
        Tensor grad;
        eval(s1, &grad);
        err = testhelp::max_grad_rel_error(
            [&](const Tensor& v) { return eval(v, nullptr); }, s1, grad);
        break;
      }
      case 3: {  // eavesdropper MSE loss w.r.t. her decoded latents
        const auto eval = [&](const Tensor& s1v, Tensor* grad) {
          Tape tape;
          const auto si = tape.input(s1v);
          const auto loss = tape.mean(tape.sqdiff(tape.input(z), si));
          if (grad != nullptr) {
            tape.backward(loss);
            *grad = tape.grad(si);
          }
          return tape.value(loss)[0];
        };
        Tensor grad;
        eval(s1, &grad);
        err = testhelp::max_grad_rel_error(
            [&](const Tensor& v) { return eval(v, nullptr); }, s1, grad);
        break;
      }
      default: {  // inversion objective: mean squared generator residual
        Tensor zvec({static_cast<std::size_t>(spec.total_codes *
                                              spec.code_dim)});
        for (double& v : zvec.vec()) v = rng.normal();
        Tensor x({static_cast<std::size_t>(gen.obs_dim)});
        for (double& v : x.vec()) v = rng.normal();
        const auto eval = [&](const Tensor& zv, Tensor* grad) {
          Tape tape;
          const auto zi = tape.input(zv);
          const auto xhat =
              tape.affine(zi, tape.input(gen_w), tape.input(gen_b));
          const auto loss = tape.mean(tape.sqdiff(xhat, tape.input(x)));
          if (grad != nullptr) {
            tape.backward(loss);
            *grad = tape.grad(zi);
          }
          return tape.value(loss)[0];
        };
        Tensor grad;
        eval(zvec, &grad);
        err = testhelp::max_grad_rel_error(
            [&](const Tensor& v) { return eval(v, nullptr); }, zvec, grad);
        break;
      }
    }
    worst = std::max(worst, err);
  }

  const double secs = seconds_since(t0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max rel err %.3g, %.1f s", worst,
                secs);
  report(1, "gradient correctness", worst < kTol && secs < 30.0, detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: Laplace sampler statistics and AWGN noise power.

void criterion_mechanism_stats() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  const std::size_t n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.laplace(1.0);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - mean * mean;

  // Kolmogorov-Smirnov at alpha = 0.01 on a fresh 1e5 draw.
  Rng ks_rng(555);
  const std::size_t m = 100000;
  std::vector<double> v(m);
  for (double& x : v) x = ks_rng.laplace(1.0);
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = v[i];
    const double cdf = x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
    ks = std::max({ks,
                   std::fabs(cdf - static_cast<double>(i) /
                                       static_cast<double>(m)),
                   std::fabs(cdf - static_cast<double>(i + 1) /
                                       static_cast<double>(m))});
  }
  const double ks_critical = 1.628 / std::sqrt(static_cast<double>(m));

  // AWGN: empirical complex-noise variance within 2% of sigma^2 at 10 dB.
  Rng awgn_rng(77);
  std::vector<std::complex<double>> zeros(n, {0.0, 0.0});
  const channel::ChannelConfig cfg{1.0, 10.0};
  const auto y = channel::transmit(zeros, cfg, awgn_rng);
  double noise_var = 0.0;
  for (const auto& s : y) noise_var += std::norm(s);
  noise_var /= static_cast<double>(n);
  const double sigma2 = cfg.noise_variance();

  const bool pass = mean > -0.02 && mean < 0.02 && var >= 1.9 && var <= 2.1 &&
                    ks < ks_critical &&
                    std::fabs(noise_var - sigma2) <= 0.02 * sigma2;
  const double secs = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "mean %.4f, var %.4f, KS %.4f < %.4f, awgn var %.5f vs %.5f, "
                "%.1f s",
                mean, var, ks, ks_critical, noise_var, sigma2, secs);
  report(2, "mechanism statistics", pass && secs < 60.0, detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: sensitivity oracle and clipping retention.

void criterion_sensitivity() {
  Rng rng(8);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double a = rng.uniform(-10.0, 10.0);
    const double b = a + rng.uniform(0.0, 10.0);
    const int n = 1 + static_cast<int>(rng.next_u64() % 50);
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += (b - a) * (b - a);
    worst = std::max(worst, std::fabs(dpmech::sensitivity({a, b}, n) -
                                      std::sqrt(sq)));
  }

  // Bounds fitted on 1e5 normals modify about 1% of a fresh in-distribution
  // draw (i.e. about 99% of elements are retained unchanged).
  Rng fit_rng(77);
  std::vector<double> fit(100000);
  for (double& x : fit) x = fit_rng.normal();
  dpmech::ClipBounds bounds;
  bounds.lo = dpmech::quantile_linear(fit, 0.005);
  bounds.hi = dpmech::quantile_linear(fit, 0.995);
  std::size_t modified = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = fit_rng.normal();
    if (x < bounds.lo || x > bounds.hi) ++modified;
  }
  const double frac = static_cast<double>(modified) / static_cast<double>(n);

  const bool pass = worst < 1e-12 && frac >= 0.005 && frac <= 0.015;
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "max |err| %.3g, modified fraction %.4f", worst, frac);
  report(3, "sensitivity oracle", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: generator inversion quality from perturbed starts.

void criterion_inversion() {
  const auto t0 = std::chrono::steady_clock::now();
  toygen::PartitionSpec spec;
  spec.total_codes = 8;
  spec.code_dim = 16;
  spec.shared_count = 2;
  spec.private_indices = {0, 1, 4, 5};
  const toygen::GeneratorParams gen =
      toygen::GeneratorParams::pretrained(spec, 96, 17);
  Rng rng(22);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Tensor codes({8, 16});
    for (double& v : codes.vec()) v = rng.normal();
    const toygen::LatentCodes z0(codes, spec);
    const Tensor x = toygen::generate(z0, gen);
    toygen::LatentCodes start = z0;
    for (double& v : start.codes.vec()) v += 0.05 * rng.normal();
    const toygen::LatentCodes z_hat = toygen::invert(x, gen, 200, 0.1, &start);
    worst = std::max(worst,
                     toygen::observation_mse(x, toygen::generate(z_hat, gen)));
  }
  const double secs = seconds_since(t0);
  char detail[96];
  std::snprintf(detail, sizeof(detail), "worst MSE %.3g, %.1f s", worst, secs);
  report(4, "inversion", worst < 1e-6 && secs < 60.0, detail);
}

// ---------------------------------------------------------------------------
// Criteria 5, 7, 8 share one basic-threat experiment over the full grids.

const expcli::ResultRow* find_row(const std::vector<expcli::ResultRow>& rows,
                                  const std::string& scheme, double eps,
                                  double snr, const std::string& role) {
  for (const expcli::ResultRow& r : rows) {
    if (r.scheme == scheme && r.epsilon == eps && r.snr_db == snr &&
        r.role == role) {
      return &r;
    }
  }
  return nullptr;
}

struct BasicRun {
  expcli::ExperimentConfig cfg;
  expcli::Checkpoint ckpt;
  std::vector<expcli::ResultRow> rows;
  double secs = 0.0;
  bool ok = false;
  std::string error;
};

BasicRun run_basic_experiment() {
  BasicRun run;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    run.cfg.seed = 3;
    run.cfg.train_count = 256;
    run.cfg.test_count = 48;
    run.cfg.out_dir = fresh_dir("semwt_acceptance_basic");
    run.cfg.validate();
    expcli::run_gendata(run.cfg);
    run.ckpt = expcli::run_train(run.cfg, run.cfg.out_dir + "/checkpoint.txt");
    run.rows = expcli::run_sweep(run.cfg, run.ckpt,
                                 run.cfg.out_dir + "/results.csv", 8);
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.secs = seconds_since(t0);
  return run;
}

void criterion_basic_trends(const BasicRun& run) {
  if (!run.ok) {
    report(5, "basic-threat trends", false, "experiment failed: " + run.error);
    return;
  }
  const double snr_hi = 20.0;
  const auto& eps_grid = run.cfg.epsilon_grid;  // ascending
  std::string why;

  // (a) utility at weak privacy: Bob within 1.5x of direct transmission for
  // the top half of the epsilon grid at 20 dB.
  bool a = true;
  for (std::size_t i = eps_grid.size() / 2; i < eps_grid.size(); ++i) {
    const auto* prop = find_row(run.rows, "proposed", eps_grid[i], snr_hi, "bob");
    const auto* direct = find_row(run.rows, "direct", eps_grid[i], snr_hi, "bob");
    if (prop == nullptr || direct == nullptr ||
        !(prop->latent_mse <= 1.5 * direct->latent_mse)) {
      a = false;
      char buf[96];
      std::snprintf(buf, sizeof(buf), " a:eps=%g %.4g vs %.4g;", eps_grid[i],
                    prop != nullptr ? prop->latent_mse : -1.0,
                    direct != nullptr ? direct->latent_mse : -1.0);
      why += buf;
    }
  }

  // (b) privacy at strong privacy: Eve's reconstruction error at least 3x
  // Bob's at the smallest epsilon, 20 dB.
  const auto* bob_lo = find_row(run.rows, "proposed", eps_grid.front(), snr_hi, "bob");
  const auto* eve_lo = find_row(run.rows, "proposed", eps_grid.front(), snr_hi, "eve");
  const bool b = bob_lo != nullptr && eve_lo != nullptr &&
                 eve_lo->obs_mse >= 3.0 * bob_lo->obs_mse;
  if (!b) why += " b;";

  // (c) Eve's error curve is monotone non-increasing in epsilon with strong
  // rank correlation at 20 dB.
  std::vector<double> eve_obs, eps_idx;
  bool c = true;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    const auto* r = find_row(run.rows, "proposed", eps_grid[i], snr_hi, "eve");
    if (r == nullptr) {
      c = false;
      break;
    }
    if (!eve_obs.empty() &&
        r->obs_mse > eve_obs.back() * (1.0 + 1e-9)) {
      c = false;
    }
    eve_obs.push_back(r->obs_mse);
    eps_idx.push_back(static_cast<double>(i));
  }
  const double rho =
      eve_obs.size() == eps_grid.size() ? testhelp::spearman(eps_idx, eve_obs)
                                        : 0.0;
  c = c && rho <= -0.8;
  if (!c) why += " c:rho=" + format_double(rho) + ";";

  // (d) Bob's error decreases monotonically as SNR rises at mid-grid epsilon.
  const double eps_mid = eps_grid[eps_grid.size() / 2 - 1];  // 100
  bool dmono = true;
  double prev = 1e300;
  for (double snr : run.cfg.snr_grid_db) {
    const auto* r = find_row(run.rows, "proposed", eps_mid, snr, "bob");
    if (r == nullptr || !(r->latent_mse < prev)) dmono = false;
    if (r != nullptr) prev = r->latent_mse;
  }
  if (!dmono) why += " d;";

  const bool runtime_ok = run.secs < 600.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "a:%d b:%d(%.3g vs %.3g) c:%d(rho %.3f) d:%d, %.0f s%s",
                a ? 1 : 0, b ? 1 : 0,
                eve_lo != nullptr ? eve_lo->obs_mse : -1.0,
                bob_lo != nullptr ? bob_lo->obs_mse : -1.0, c ? 1 : 0, rho,
                dmono ? 1 : 0, run.secs, why.c_str());
  report(5, "basic-threat trends", a && b && c && dmono && runtime_ok, detail);
}

void criterion_baseline_separation(const BasicRun& run) {
  if (!run.ok) {
    report(7, "baseline separation", false, "experiment failed: " + run.error);
    return;
  }
  const double snr_hi = 20.0;
  const double eps_lo = run.cfg.epsilon_grid.front();
  const double eps_hi = run.cfg.epsilon_grid.back();
  const auto* trad_bob = find_row(run.rows, "traditional_dp", eps_lo, snr_hi, "bob");
  const auto* prop_bob = find_row(run.rows, "proposed", eps_lo, snr_hi, "bob");
  const auto* trad_eve = find_row(run.rows, "traditional_dp", eps_hi, snr_hi, "eve");
  const auto* prop_eve = find_row(run.rows, "proposed", eps_hi, snr_hi, "eve");
  const bool have = trad_bob != nullptr && prop_bob != nullptr &&
                    trad_eve != nullptr && prop_eve != nullptr;
  const bool sep = have && trad_bob->latent_mse >= 5.0 * prop_bob->latent_mse;
  const bool rate = have && trad_eve->privacy_rate < prop_eve->privacy_rate;
  char detail[192];
  std::snprintf(detail, sizeof(detail),
                "small-eps bob %.4g vs %.4g; large-eps eve rate %.3f vs %.3f",
                have ? trad_bob->latent_mse : -1.0,
                have ? prop_bob->latent_mse : -1.0,
                have ? trad_eve->privacy_rate : -1.0,
                have ? prop_eve->privacy_rate : -1.0);
  report(7, "baseline separation", sep && rate, detail);
}

Tensor stack_rows(const Tensor& a, const Tensor& b) {
  Tensor out({a.extent(0) + b.extent(0), a.extent(1)});
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[a.size() + i] = b[i];
  return out;
}

void criterion_resemblance(const BasicRun& run) {
  if (!run.ok) {
    report(8, "resemblance calibration", false,
           "experiment failed: " + run.error);
    return;
  }
  // Pinned at the smallest epsilon, where genuine DP noise dwarfs the clipped
  // codes: the unperturbed-codes comparison then has an unmistakable scale
  // signal, while the capped protection gain keeps the protected samples
  // closer to the genuine noise than the raw codes are.
  const double eps = 1.0;
  const expcli::EpsilonModels& em = run.ckpt.for_epsilon(eps);
  const toygen::PartitionSpec spec = run.ckpt.spec;
  const toygen::Dataset train_ds =
      toygen::load_dataset(expcli::train_path(run.cfg), spec);
  std::vector<toygen::LatentCodes> latents;
  for (const auto& rec : train_ds.records) {
    latents.push_back(dpmech::clip(rec.latents, run.ckpt.bounds));
  }

  Rng g1(stream_id(run.cfg.seed, "acc/resemblance/g1"));
  Rng g2(stream_id(run.cfg.seed, "acc/resemblance/g2"));
  Rng g3(stream_id(run.cfg.seed, "acc/resemblance/g3"));
  Rng g4(stream_id(run.cfg.seed, "acc/resemblance/g4"));
  // Two independent draws per class for the null comparison, stacked to keep
  // the held-out AUC estimate tight.
  const Tensor null1 =
      stack_rows(metrics::genuine_laplace_samples(latents, em.mech, g1),
                 metrics::genuine_laplace_samples(latents, em.mech, g2));
  const Tensor null2 =
      stack_rows(metrics::genuine_laplace_samples(latents, em.mech, g3),
                 metrics::genuine_laplace_samples(latents, em.mech, g4));

  Rng g5(stream_id(run.cfg.seed, "acc/resemblance/g5"));
  const Tensor genuine = metrics::genuine_laplace_samples(latents, em.mech, g5);
  const Tensor prot =
      metrics::protected_samples(latents, em.stage1.protection);
  const Tensor plain = metrics::unperturbed_samples(latents);

  metrics::AucConfig auc_cfg;
  auc_cfg.seed = 11;
  const double auc_null = metrics::resemblance_auc(null1, null2, auc_cfg);
  auc_cfg.seed = 12;
  const double auc_prot = metrics::resemblance_auc(genuine, prot, auc_cfg);
  auc_cfg.seed = 13;
  const double auc_plain = metrics::resemblance_auc(genuine, plain, auc_cfg);

  const auto sep = [](double auc) { return std::max(auc, 1.0 - auc); };
  const bool pass = auc_null >= 0.45 && auc_null <= 0.55 &&
                    sep(auc_plain) > 0.9 && sep(auc_prot) < sep(auc_plain);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "null %.3f, protected %.3f, unperturbed %.3f (eps %g)",
                auc_null, auc_prot, auc_plain, eps);
  report(8, "resemblance calibration", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 6: stronger-threat two-stage training.

void criterion_stronger() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    expcli::ExperimentConfig cfg = expcli::parse_config("threat = stronger\n");
    cfg.seed = 3;
    cfg.train_count = 256;
    cfg.test_count = 48;
    cfg.epsilon_grid = {100.0};
    cfg.run_direct = false;
    cfg.run_traditional_dp = false;
    cfg.out_dir = fresh_dir("semwt_acceptance_stronger");
    cfg.validate();
    expcli::run_gendata(cfg);
    const expcli::Checkpoint ckpt =
        expcli::run_train(cfg, cfg.out_dir + "/checkpoint.txt");
    const std::vector<expcli::ResultRow> rows =
        expcli::run_sweep(cfg, ckpt, cfg.out_dir + "/results.csv", 8);

    // Stage-2 eavesdropper loss trajectory from the training history.
    std::vector<double> eve_losses, epochs;
    {
      std::ifstream in(cfg.out_dir + "/history.csv");
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() >= 9 && f[1] == "2") {
          epochs.push_back(parse_double(f[2]));
          eve_losses.push_back(parse_double(f[8]));
        }
      }
    }
    const bool decreases =
        eve_losses.size() >= 2 && eve_losses.back() < eve_losses.front() &&
        testhelp::spearman(epochs, eve_losses) <= -0.95;

    // Eve stays at least 2x worse than Bob at every SNR at the trained eps.
    bool margin = true;
    std::string worst;
    for (double snr : cfg.snr_grid_db) {
      const auto* bob = find_row(rows, "proposed", 100.0, snr, "bob");
      const auto* eve = find_row(rows, "proposed", 100.0, snr, "eve");
      if (bob == nullptr || eve == nullptr ||
          !(eve->obs_mse >= 2.0 * bob->obs_mse)) {
        margin = false;
        worst += " snr" + format_double(snr);
      }
    }

    const double secs = seconds_since(t0);
    char detail[192];
    std::snprintf(
        detail, sizeof(detail),
        "stage-2 loss %.4f -> %.4f (rho %.3f), 2x margin %s%s, %.0f s",
        eve_losses.empty() ? -1.0 : eve_losses.front(),
        eve_losses.empty() ? -1.0 : eve_losses.back(),
        eve_losses.size() >= 2 ? testhelp::spearman(epochs, eve_losses) : 0.0,
        margin ? "at all SNRs" : "violated at", worst.c_str(), secs);
    report(6, "stronger-threat trends", decreases && margin, detail);
  } catch (const std::exception& e) {
    report(6, "stronger-threat trends", false,
           std::string("experiment failed: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical outputs from repeated CLI train + sweep runs.

void criterion_reproducibility(const std::string& cli) {
  try {
    const std::string dir = fresh_dir("semwt_acceptance_repro");
    const std::string cfg_path = dir + "/experiment.cfg";
    {
      std::ofstream out(cfg_path, std::ios::binary);
      out << "seed = 5\n"
             "train_count = 64\n"
             "test_count = 16\n"
             "epsilon_grid = 1,100\n"
             "snr_grid_db = 20\n"
             "stage1_epochs = 8\n"
             "out_dir = " << dir << "/out\n";
    }
    const auto run_all = [&]() -> bool {
      std::filesystem::remove_all(dir + "/out");
      const std::string base = "\"" + cli + "\" ";
      const std::string tail = " --config \"" + cfg_path + "\" > /dev/null 2>&1";
      if (std::system((base + "gendata" + tail).c_str()) != 0) return false;
      if (std::system((base + "train" + tail).c_str()) != 0) return false;
      if (std::system((base + "sweep --jobs 2" + tail).c_str()) != 0) {
        return false;
      }
      return true;
    };
    if (!run_all()) {
      report(9, "reproducibility", false, "first CLI run failed");
      return;
    }
    const std::string results1 = read_file(dir + "/out/results.csv");
    const std::string ckpt1 = read_file(dir + "/out/checkpoint.txt");
    const std::string hist1 = read_file(dir + "/out/history.csv");
    if (!run_all()) {
      report(9, "reproducibility", false, "second CLI run failed");
      return;
    }
    const bool same_results = read_file(dir + "/out/results.csv") == results1;
    const bool same_ckpt = read_file(dir + "/out/checkpoint.txt") == ckpt1;
    const bool same_hist = read_file(dir + "/out/history.csv") == hist1;
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "results %s, checkpoint %s, history %s",
                  same_results ? "identical" : "DIFFER",
                  same_ckpt ? "identical" : "DIFFER",
                  same_hist ? "identical" : "DIFFER");
    report(9, "reproducibility", same_results && same_ckpt && same_hist,
           detail);
  } catch (const std::exception& e) {
    report(9, "reproducibility", false, std::string("failed: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-semwt_cli>\n", argv[0]);
    return 2;
  }
  criterion_gradients();
  criterion_mechanism_stats();
  criterion_sensitivity();
  criterion_inversion();
  const BasicRun basic = run_basic_experiment();
  criterion_basic_trends(basic);
  criterion_stronger();
  criterion_baseline_separation(basic);
  criterion_resemblance(basic);
  criterion_reproducibility(argv[1]);
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
