// Experiment front end: flat key = value configuration, bit-exact model
// checkpoints, dataset generation, per-epsilon training, the (epsilon, SNR)
// evaluation sweep over all schemes, and plot-data reporting.
#ifndef SEMWT_EXPCLI_HPP
#define SEMWT_EXPCLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semwt/dpmech.hpp"
#include "semwt/shield.hpp"
#include "semwt/toygen.hpp"
#include "semwt/wiretap.hpp"

namespace semwt::expcli {

struct ExperimentConfig {
  std::uint64_t seed = 1;

  // Toy-scale system parameters.
  int total_codes = 8;
  int code_dim = 16;
  int obs_dim = 96;
  int shared_count = 2;

  int train_count = 512;
  int test_count = 128;

  std::vector<double> epsilon_grid = {1,   5,   10,  30,  100,
                                      200, 300, 500, 800, 2000};
  std::vector<double> snr_grid_db = {0, 5, 10, 15, 20};

  double lambda = 1e-3;
  int batch_size = 64;
  double legit_lr = 0.02;
  double disc_lr = 0.01;
  double eve_lr = 0.02;
  double momentum = 0.9;
  int disc_steps = 1;
  int sched_period0 = 10;
  int sched_mult = 2;
  int stage1_epochs = 60;
  int stage2_epochs = 30;  // half of stage 1
  double train_snr_db = 20.0;
  double power = 1.0;

  // Threat model and partition presets.  The private set always contains the
  // shared codes; the eavesdropper guess applies to the stronger threat only.
  std::string threat = "basic";
  std::vector<int> private_indices = {0, 1, 4, 5};
  std::vector<int> eve_guess_indices = {0, 1, 6, 7};

  double clip_lo_quantile = 0.005;
  double clip_hi_quantile = 0.995;
  int invert_iters = 200;
  double invert_eta = 0.1;
  double tau_quantile = 0.95;

  bool run_direct = true;
  bool run_traditional_dp = true;

  std::string out_dir = "out";

  toygen::PartitionSpec partition() const;
  toygen::PartitionSpec eve_partition() const;
  wiretap::ThreatKind threat_kind() const;
  shield::TrainerConfig trainer_config() const;
  void validate() const;

  bool operator==(const ExperimentConfig& other) const;
};

// Flat key = value text; '#' starts a comment.  Unknown keys are hard errors
// (ConfigError).  parse(emit(c)) == c.
ExperimentConfig parse_config(const std::string& text);
std::string emit_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// Per-epsilon trained models.  Stage 1 always holds the legitimate nets and
// the discriminator; stage 2 exists only for the stronger threat and holds
// the frozen legitimate snapshot plus Eve's trained deprotection net.
struct EpsilonModels {
  double epsilon = 0.0;
  dpmech::PrivacyMechanism mech;
  wiretap::ShieldModels stage1;
  std::optional<wiretap::ShieldModels> stage2;
  std::optional<shield::ShieldNet> denoiser;  // traditional-DP receiver
};

struct Checkpoint {
  wiretap::ThreatKind kind = wiretap::ThreatKind::kBasic;
  std::uint64_t gen_seed = 0;
  int obs_dim = 0;
  toygen::PartitionSpec spec;
  toygen::PartitionSpec eve_spec;  // stronger only
  dpmech::ClipBounds bounds;
  double tau = 0.0;
  double train_snr_db = 20.0;
  double power = 1.0;
  int invert_iters = 200;
  double invert_eta = 0.1;
  std::vector<EpsilonModels> models;

  const EpsilonModels& for_epsilon(double epsilon) const;
};

// Hexfloat text format; round trip is bit-exact.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// One results row per (scheme, epsilon, snr, role) cell.
struct ResultRow {
  std::string scheme;  // proposed | direct | traditional_dp
  std::string threat;  // basic | stronger
  double epsilon = 0.0;
  double snr_db = 0.0;
  std::string role;  // bob | eve
  double latent_mse = 0.0;
  double latent_mse_se = 0.0;
  double obs_mse = 0.0;
  double obs_mse_se = 0.0;
  double privacy_rate = 0.0;
  std::size_t n = 0;
};

inline constexpr const char* kResultsHeader =
    "scheme,threat,epsilon,snr_db,role,latent_mse,latent_mse_se,obs_mse,"
    "obs_mse_se,privacy_rate,n";

std::string format_result_row(const ResultRow& row);
std::vector<ResultRow> load_results(const std::string& path);

// Subcommand bodies.  All are deterministic per config; sweep cells use
// isolated RNG streams hash(seed, "sweep/<scheme>/s<j>/<role>") so any cell
// can be reproduced alone.  The stream label omits the epsilon index on
// purpose: draw counts are epsilon-independent, which pairs the noise across
// the epsilon grid (common random numbers for trend comparisons).
void run_gendata(const ExperimentConfig& config);
Checkpoint run_train(const ExperimentConfig& config,
                     const std::string& checkpoint_path);
std::vector<ResultRow> run_sweep(const ExperimentConfig& config,
                                 const Checkpoint& ckpt,
                                 const std::string& results_path, int jobs);
void run_report(const std::string& results_path, const std::string& out_dir);

std::string train_path(const ExperimentConfig& config);
std::string test_path(const ExperimentConfig& config);

toygen::GeneratorParams make_generator(const ExperimentConfig& config);

}  // namespace semwt::expcli

#endif  // SEMWT_EXPCLI_HPP
