#include "semwt/wiretap.hpp"

#include <cmath>
#include <stdexcept>

#include "semwt/autodiff.hpp"
#include "semwt/errors.hpp"

namespace semwt::wiretap {

namespace {

// Flatten [K, D] codes, zero-padding by one element if the length is odd so
// complex pairing is lossless.
std::vector<double> flatten_padded(const Tensor& codes) {
  std::vector<double> flat(codes.vec());
  if (flat.size() % 2 != 0) flat.push_back(0.0);
  return flat;
}

toygen::LatentCodes codes_from_flat(const std::vector<double>& flat,
                                    const toygen::PartitionSpec& spec) {
  const std::size_t kd =
      static_cast<std::size_t>(spec.total_codes) * spec.code_dim;
  if (flat.size() < kd) {
    throw std::invalid_argument("received vector too short for latent layout");
  }
  Tensor codes({static_cast<std::size_t>(spec.total_codes),
                static_cast<std::size_t>(spec.code_dim)},
               std::vector<double>(flat.begin(), flat.begin() + kd));
  return toygen::LatentCodes(std::move(codes), spec);
}

Encoded encode_codes(const toygen::LatentCodes& z2,
                     const toygen::LatentCodes& z_clipped,
                     const SystemBundle& bundle) {
  std::vector<double> flat = flatten_padded(z2.codes);
  const double scale = channel::power_scale(flat, bundle.power);
  for (double& v : flat) v *= scale;
  Encoded enc;
  enc.symbols = channel::pair_complex(flat);
  enc.norm_scale = scale;
  enc.z_clipped = z_clipped;
  return enc;
}

std::vector<double> receive_flat(
    const std::vector<std::complex<double>>& received, double norm_scale,
    const toygen::PartitionSpec& spec) {
  std::vector<double> flat = channel::unpair_complex(received);
  const std::size_t kd =
      static_cast<std::size_t>(spec.total_codes) * spec.code_dim;
  if (flat.size() != kd && flat.size() != kd + 1) {
    throw std::invalid_argument("received length does not match latent layout");
  }
  flat.resize(kd);  // drop the pairing pad
  for (double& v : flat) v /= norm_scale;
  return flat;
}

double mse(const Tensor& a, const Tensor& b) { return shield::eve_loss(a, b); }

}  // namespace

void SystemBundle::validate() const {
  spec.validate();
  const int md = spec.private_count() * spec.code_dim;
  if (models.protection.rows > 0 && models.protection.out_dim() != md) {
    throw ConfigError("bundle: protection net does not match partition");
  }
  if (models.deprotection_legit.rows > 0 &&
      models.deprotection_legit.out_dim() != md) {
    throw ConfigError("bundle: deprotection net does not match partition");
  }
  if (threat.kind == ThreatKind::kStronger) {
    threat.eve_guessed_partition.validate();
    if (threat.eve_guessed_partition.total_codes != spec.total_codes ||
        threat.eve_guessed_partition.code_dim != spec.code_dim) {
      throw ConfigError("bundle: eve partition dims mismatch");
    }
  }
  if (mech.scale != mech.sensitivity / mech.epsilon) {
    throw ConfigError("bundle: mechanism scale inconsistent");
  }
}

Encoded alice_encode_latents(const toygen::LatentCodes& z,
                             const SystemBundle& bundle) {
  if (bundle.models.protection.aux_dim != 0) {
    throw ConfigError(
        "alice_encode: auxiliary-noise protection is a training-time study "
        "flag and has no evaluation path");
  }
  const toygen::LatentCodes z_clipped = dpmech::clip(z, bundle.bounds);
  auto [priv, common] = toygen::split(z_clipped);
  const Tensor protected_priv = bundle.models.protection.forward(
      Tensor({static_cast<std::size_t>(bundle.spec.private_count()),
              static_cast<std::size_t>(bundle.spec.code_dim)},
             priv.vec()));
  const toygen::LatentCodes z2 =
      toygen::merge(protected_priv, common, bundle.spec);
  return encode_codes(z2, z_clipped, bundle);
}

Encoded alice_encode(const Tensor& observation, const SystemBundle& bundle) {
  const toygen::LatentCodes z = toygen::invert(
      observation, bundle.generator, bundle.invert_iters, bundle.invert_eta);
  return alice_encode_latents(z, bundle);
}

DecodeResult bob_decode(const std::vector<std::complex<double>>& received,
                        double norm_scale, const SystemBundle& bundle) {
  const std::vector<double> flat =
      receive_flat(received, norm_scale, bundle.spec);
  const toygen::LatentCodes y1 = codes_from_flat(flat, bundle.spec);
  auto [y_priv, y_common] = toygen::split(y1);
  const Tensor refined = bundle.models.deprotection_legit.forward(
      Tensor({static_cast<std::size_t>(bundle.spec.private_count()),
              static_cast<std::size_t>(bundle.spec.code_dim)},
             y_priv.vec()));
  DecodeResult out;
  out.codes = toygen::merge(refined, y_common, bundle.spec);
  out.observation = toygen::generate(out.codes, bundle.generator);
  return out;
}

DecodeResult eve_decode(const std::vector<std::complex<double>>& received,
                        double norm_scale, const SystemBundle& bundle) {
  const std::vector<double> flat =
      receive_flat(received, norm_scale, bundle.spec);
  DecodeResult out;
  if (bundle.threat.kind == ThreatKind::kBasic) {
    // Unaware of the protection: the received codes go straight into the
    // generator; no deprotection net is ever invoked.
    out.codes = codes_from_flat(flat, bundle.spec);
    out.observation = toygen::generate(out.codes, bundle.generator);
    return out;
  }
  if (!bundle.models.deprotection_eve) {
    throw ConfigError("eve_decode: stronger threat requires a trained eve net");
  }
  const toygen::PartitionSpec& guess = bundle.threat.eve_guessed_partition;
  const toygen::LatentCodes y2 = codes_from_flat(flat, guess);
  auto [y_priv, y_common] = toygen::split(y2);
  const Tensor refined = bundle.models.deprotection_eve->forward(
      Tensor({static_cast<std::size_t>(guess.private_count()),
              static_cast<std::size_t>(guess.code_dim)},
             y_priv.vec()));
  const toygen::LatentCodes s2 = toygen::merge(refined, y_common, guess);
  out.codes = toygen::LatentCodes(s2.codes, bundle.spec);
  out.observation = toygen::generate(out.codes, bundle.generator);
  return out;
}

TrainResult train_basic(const SystemBundle& bundle,
                        const std::vector<toygen::LatentCodes>& train_latents,
                        const TrainSettings& settings) {
  if (train_latents.empty()) {
    throw std::invalid_argument("train_basic: empty dataset");
  }
  std::vector<toygen::LatentCodes> clipped;
  clipped.reserve(train_latents.size());
  for (const toygen::LatentCodes& z : train_latents) {
    clipped.push_back(dpmech::clip(z, bundle.bounds));
  }
  shield::AdversarialTrainer trainer(bundle.spec, bundle.mech,
                                     settings.trainer);
  TrainResult result;
  for (int epoch = 0; epoch < settings.stage1_epochs; ++epoch) {
    TrainHistoryRow row;
    row.epoch = epoch;
    row.stage = 1;
    row.stats = trainer.adversarial_epoch(clipped, epoch);
    result.history.push_back(row);
  }
  result.models.protection = trainer.protection();
  result.models.deprotection_legit = trainer.deprotection();
  result.models.discriminator = trainer.discriminator();
  return result;
}

TrainResult train_stronger(const SystemBundle& bundle,
                           const std::vector<toygen::LatentCodes>& train_latents,
                           const TrainSettings& settings) {
  if (bundle.threat.kind != ThreatKind::kStronger) {
    throw ConfigError("train_stronger: bundle threat model is not stronger");
  }
  // First stage follows the basic procedure exactly.
  TrainResult result = train_basic(bundle, train_latents, settings);

  std::vector<toygen::LatentCodes> clipped;
  clipped.reserve(train_latents.size());
  for (const toygen::LatentCodes& z : train_latents) {
    clipped.push_back(dpmech::clip(z, bundle.bounds));
  }
  shield::EveTrainer eve_trainer(bundle.spec,
                                 bundle.threat.eve_guessed_partition,
                                 result.models.protection, settings.trainer);
  for (int epoch = 0; epoch < settings.stage2_epochs; ++epoch) {
    TrainHistoryRow row;
    row.epoch = epoch;
    row.stage = 2;
    row.eve_loss = eve_trainer.epoch(clipped, epoch);
    result.history.push_back(row);
  }
  result.models.deprotection_eve = eve_trainer.eve_net();
  return result;
}

SampleEval eval_proposed(const toygen::LatentCodes& z,
                         const SystemBundle& bundle, Rng& bob_rng,
                         Rng& eve_rng) {
  const Encoded enc = alice_encode_latents(z, bundle);
  const Tensor x_ref = toygen::generate(z, bundle.generator);
  SampleEval out;
  const auto y1 = channel::transmit(enc.symbols, bundle.legit_channel, bob_rng);
  const DecodeResult bob = bob_decode(y1, enc.norm_scale, bundle);
  const auto y2 = channel::transmit(enc.symbols, bundle.eve_channel, eve_rng);
  const DecodeResult eve = eve_decode(y2, enc.norm_scale, bundle);
  out.bob_latent_mse = mse(enc.z_clipped.codes, bob.codes.codes);
  out.eve_latent_mse = mse(enc.z_clipped.codes, eve.codes.codes);
  out.bob_obs_mse = toygen::observation_mse(x_ref, bob.observation);
  out.eve_obs_mse = toygen::observation_mse(x_ref, eve.observation);
  out.bob_obs = bob.observation;
  out.eve_obs = eve.observation;
  return out;
}

SampleEval eval_direct(const toygen::LatentCodes& z, const SystemBundle& bundle,
                       Rng& bob_rng, Rng& eve_rng) {
  const toygen::LatentCodes z_clipped = dpmech::clip(z, bundle.bounds);
  const Encoded enc = encode_codes(z_clipped, z_clipped, bundle);
  const Tensor x_ref = toygen::generate(z, bundle.generator);
  SampleEval out;
  const auto decode_direct = [&](const std::vector<std::complex<double>>& y) {
    const std::vector<double> flat = receive_flat(y, enc.norm_scale, bundle.spec);
    DecodeResult r;
    r.codes = codes_from_flat(flat, bundle.spec);
    r.observation = toygen::generate(r.codes, bundle.generator);
    return r;
  };
  const DecodeResult bob = decode_direct(
      channel::transmit(enc.symbols, bundle.legit_channel, bob_rng));
  const DecodeResult eve = decode_direct(
      channel::transmit(enc.symbols, bundle.eve_channel, eve_rng));
  out.bob_latent_mse = mse(z_clipped.codes, bob.codes.codes);
  out.eve_latent_mse = mse(z_clipped.codes, eve.codes.codes);
  out.bob_obs_mse = toygen::observation_mse(x_ref, bob.observation);
  out.eve_obs_mse = toygen::observation_mse(x_ref, eve.observation);
  out.bob_obs = bob.observation;
  out.eve_obs = eve.observation;
  return out;
}

SampleEval eval_traditional_dp(const toygen::LatentCodes& z,
                               const SystemBundle& bundle,
                               const shield::ShieldNet& denoiser, Rng& dp_rng,
                               Rng& bob_rng, Rng& eve_rng) {
  const toygen::LatentCodes z_clipped = dpmech::clip(z, bundle.bounds);
  auto [priv, common] = toygen::split(z_clipped);
  const Tensor noisy_priv = dpmech::laplace_perturb(priv, bundle.mech, dp_rng);
  const toygen::LatentCodes z2 =
      toygen::merge(noisy_priv, common, bundle.spec);
  const Encoded enc = encode_codes(z2, z_clipped, bundle);
  const Tensor x_ref = toygen::generate(z, bundle.generator);

  SampleEval out;
  // Bob: trained denoiser on the private rows.
  {
    const auto y1 =
        channel::transmit(enc.symbols, bundle.legit_channel, bob_rng);
    const std::vector<double> flat =
        receive_flat(y1, enc.norm_scale, bundle.spec);
    const toygen::LatentCodes y = codes_from_flat(flat, bundle.spec);
    auto [y_priv, y_common] = toygen::split(y);
    const Tensor denoised = denoiser.forward(
        Tensor({static_cast<std::size_t>(bundle.spec.private_count()),
                static_cast<std::size_t>(bundle.spec.code_dim)},
               y_priv.vec()));
    const toygen::LatentCodes s1 =
        toygen::merge(denoised, y_common, bundle.spec);
    out.bob_latent_mse = mse(z_clipped.codes, s1.codes);
    out.bob_obs = toygen::generate(s1, bundle.generator);
    out.bob_obs_mse = toygen::observation_mse(x_ref, out.bob_obs);
  }
  // Eve: direct generation from the received codes.
  {
    const auto y2 = channel::transmit(enc.symbols, bundle.eve_channel, eve_rng);
    const std::vector<double> flat =
        receive_flat(y2, enc.norm_scale, bundle.spec);
    const toygen::LatentCodes y = codes_from_flat(flat, bundle.spec);
    out.eve_latent_mse = mse(z_clipped.codes, y.codes);
    out.eve_obs = toygen::generate(y, bundle.generator);
    out.eve_obs_mse = toygen::observation_mse(x_ref, out.eve_obs);
  }
  return out;
}

shield::ShieldNet train_dp_denoiser(
    const SystemBundle& bundle,
    const std::vector<toygen::LatentCodes>& train_latents,
    const TrainSettings& settings) {
  if (train_latents.empty()) {
    throw std::invalid_argument("train_dp_denoiser: empty dataset");
  }
  const shield::TrainerConfig& cfg = settings.trainer;
  const int m = bundle.spec.private_count();
  const int d = bundle.spec.code_dim;
  const std::size_t md = static_cast<std::size_t>(m) * d;
  const std::size_t kd =
      static_cast<std::size_t>(bundle.spec.total_codes) * d;
  Rng init_rng(stream_id(cfg.seed, "wiretap/dp-denoiser-init"));
  shield::ShieldNet net = shield::ShieldNet::near_identity(
      shield::ShieldRole::kDeprotectionLegit, m, d, init_rng);
  // The inputs carry genuine Laplace noise, whose variance grows as epsilon
  // shrinks; condition the step size on the input second moment so gradient
  // descent on the quadratic stays contractive at every noise level.
  const double input_m2 =
      1.0 + 2.0 * bundle.mech.scale * bundle.mech.scale;
  const double lr = std::min(cfg.legit_lr, 0.25 / input_m2);
  SgdOptimizer opt(CosineWarmRestarts::make(lr, 0.0, cfg.sched_period0,
                                            cfg.sched_mult),
                   cfg.momentum);
  Rng rng(stream_id(cfg.seed, "wiretap/dp-denoiser-train"));

  std::vector<toygen::LatentCodes> clipped;
  clipped.reserve(train_latents.size());
  for (const toygen::LatentCodes& z : train_latents) {
    clipped.push_back(dpmech::clip(z, bundle.bounds));
  }
  const double sigma2 =
      channel::ChannelConfig{cfg.power, cfg.train_snr_db}.noise_variance();
  const double comp_std = std::sqrt(sigma2 / 2.0);
  const std::vector<int> priv_rows = bundle.spec.private_indices;

  for (int epoch = 0; epoch < settings.stage1_epochs; ++epoch) {
    for (std::size_t begin = 0; begin < clipped.size();
         begin += cfg.batch_size) {
      const std::size_t end = std::min(
          clipped.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t b = end - begin;
      Tensor rx_priv({b, md});
      Tensor target({b, md});
      for (std::size_t s = 0; s < b; ++s) {
        const Tensor& codes = clipped[begin + s].codes;
        // Transmitted value: genuine Laplace noise on the private rows.
        std::vector<double> z2(codes.vec());
        for (int r : priv_rows) {
          for (int c = 0; c < d; ++c) {
            z2[static_cast<std::size_t>(r) * d + c] +=
                rng.laplace(bundle.mech.scale);
          }
        }
        double energy = 0.0;
        for (double v : z2) energy += v * v;
        const double alpha =
            std::sqrt(cfg.power * static_cast<double>(kd) /
                      std::max(energy, 1e-300));
        std::size_t j = 0;
        for (int r : priv_rows) {
          for (int c = 0; c < d; ++c, ++j) {
            const double v = z2[static_cast<std::size_t>(r) * d + c];
            rx_priv[s * md + j] = (alpha * v + comp_std * rng.normal()) / alpha;
            target[s * md + j] = codes[static_cast<std::size_t>(r) * d + c];
          }
        }
      }
      Tape tape;
      const Tape::Id w = tape.input(net.weight);
      const Tape::Id bb = tape.input(net.bias);
      const Tape::Id s1 = tape.affine(tape.input(rx_priv), w, bb);
      const Tape::Id loss = tape.mean(tape.sqdiff(s1, tape.input(target)));
      tape.backward(loss);
      opt.step({&net.weight, &net.bias}, {&tape.grad(w), &tape.grad(bb)});
    }
    opt.advance_schedule();
  }
  return net;
}

}  // namespace semwt::wiretap

