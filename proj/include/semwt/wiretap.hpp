// End-to-end Alice/Bob/Eve pipelines over the AWGN wiretap channel, the two
// eavesdropper threat models, the two-stage training strategy, and the two
// evaluation baselines (direct transmission, traditional DP protection).
#ifndef SEMWT_WIRETAP_HPP
#define SEMWT_WIRETAP_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "semwt/channel.hpp"
#include "semwt/dpmech.hpp"
#include "semwt/shield.hpp"
#include "semwt/toygen.hpp"

namespace semwt::wiretap {

enum class ThreatKind { kBasic, kStronger };

struct ThreatModel {
  ThreatKind kind = ThreatKind::kBasic;
  // Stronger only: Eve's guessed private partition (may differ from the truth).
  toygen::PartitionSpec eve_guessed_partition;
};

struct ShieldModels {
  shield::ShieldNet protection;
  shield::ShieldNet deprotection_legit;
  shield::Discriminator discriminator;
  std::optional<shield::ShieldNet> deprotection_eve;
};

struct SystemBundle {
  toygen::GeneratorParams generator;
  toygen::PartitionSpec spec;  // true private partition
  dpmech::ClipBounds bounds;
  dpmech::PrivacyMechanism mech;
  channel::ChannelConfig legit_channel;
  channel::ChannelConfig eve_channel;
  ShieldModels models;
  ThreatModel threat;
  double power = 1.0;
  int invert_iters = 200;
  double invert_eta = 0.1;

  void validate() const;
};

struct Encoded {
  std::vector<std::complex<double>> symbols;
  double norm_scale = 1.0;       // public normalization factor
  toygen::LatentCodes z_clipped; // Alice's clipped latents Z (cached)
};

// Full transmitter: invert, clip, split, protect, merge, normalize, pair.
Encoded alice_encode(const Tensor& observation, const SystemBundle& bundle);
// Same flow starting from known latents (skips the inversion).
Encoded alice_encode_latents(const toygen::LatentCodes& z,
                             const SystemBundle& bundle);

struct DecodeResult {
  toygen::LatentCodes codes;  // S_1 / S_2 (or Y_2 reshaped, basic Eve)
  Tensor observation;         // generated reconstruction
};

DecodeResult bob_decode(const std::vector<std::complex<double>>& received,
                        double norm_scale, const SystemBundle& bundle);
DecodeResult eve_decode(const std::vector<std::complex<double>>& received,
                        double norm_scale, const SystemBundle& bundle);

struct TrainHistoryRow {
  int epoch = 0;
  int stage = 1;
  shield::EpochStats stats;
  double eve_loss = 0.0;  // stage 2 only
};

struct TrainResult {
  ShieldModels models;
  std::vector<TrainHistoryRow> history;
};

struct TrainSettings {
  shield::TrainerConfig trainer;
  int stage1_epochs = 60;
  int stage2_epochs = 30;  // defaults to half of stage 1
};

// Basic threat: only the legitimate nets and the discriminator are trained.
TrainResult train_basic(const SystemBundle& bundle,
                        const std::vector<toygen::LatentCodes>& train_latents,
                        const TrainSettings& settings);

// Stronger threat: stage 1 as train_basic, then the legitimate nets are
// frozen and only Eve's deprotection net is trained.
TrainResult train_stronger(const SystemBundle& bundle,
                           const std::vector<toygen::LatentCodes>& train_latents,
                           const TrainSettings& settings);

// Per-sample evaluation outputs shared by all schemes.
struct SampleEval {
  double bob_latent_mse = 0.0;
  double bob_obs_mse = 0.0;
  double eve_latent_mse = 0.0;
  double eve_obs_mse = 0.0;
  Tensor bob_obs;
  Tensor eve_obs;
};

// Proposed scheme: full protect/deprotect pipeline under the bundle's threat
// model, one independent noise draw per link.
SampleEval eval_proposed(const toygen::LatentCodes& z,
                         const SystemBundle& bundle, Rng& bob_rng,
                         Rng& eve_rng);

// Direct transmission without protection: Z transmitted as-is, both
// receivers decode by direct generation.  Protection nets are never invoked.
SampleEval eval_direct(const toygen::LatentCodes& z, const SystemBundle& bundle,
                       Rng& bob_rng, Rng& eve_rng);

// Traditional DP protection: genuine Laplace noise on the private rows is
// the transmitted value; Bob applies a trained denoiser, Eve decodes
// directly.
SampleEval eval_traditional_dp(const toygen::LatentCodes& z,
                               const SystemBundle& bundle,
                               const shield::ShieldNet& denoiser, Rng& dp_rng,
                               Rng& bob_rng, Rng& eve_rng);

// Trains the traditional-DP receiver denoiser (ShieldNet architecture,
// minimizing MSE(Z, S1) through genuine Laplace noise plus the channel).
shield::ShieldNet train_dp_denoiser(
    const SystemBundle& bundle,
    const std::vector<toygen::LatentCodes>& train_latents,
    const TrainSettings& settings);

}  // namespace semwt::wiretap

#endif  // SEMWT_WIRETAP_HPP
