// Learnable DP protection / deprotection networks, the discriminator, their
// losses, and the alternating adversarial training step.
//
// A ShieldNet vectorizes its [m, D] input, applies one affine layer, and
// reshapes back.  The discriminator is two affine layers with a sigmoid
// hidden activation and a sigmoid output clamped away from {0, 1} by 1e-7.
#ifndef SEMWT_SHIELD_HPP
#define SEMWT_SHIELD_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "semwt/autodiff.hpp"
#include "semwt/channel.hpp"
#include "semwt/dpmech.hpp"
#include "semwt/optimizer.hpp"
#include "semwt/rng.hpp"
#include "semwt/tensor.hpp"
#include "semwt/toygen.hpp"

namespace semwt::shield {

inline constexpr double kDiscOutputClamp = 1e-7;

// Ceiling on the protection warm-start gain.  The warm start matches the
// per-element variance of the genuine guidance sample (1 + 2 b^2 for Laplace
// scale b) so the adversarial game opens near its own equilibrium, but a full
// match at very small epsilon would spend the entire transmit-power budget on
// noise mimicry and crush the common codes under per-image normalization, so
// the gain saturates here.
inline constexpr double kProtectionGainCap = 15.0;

enum class ShieldRole { kProtection, kDeprotectionLegit, kDeprotectionEve };

struct ShieldNet {
  ShieldRole role = ShieldRole::kProtection;
  int rows = 0;      // m
  int code_dim = 0;  // D
  int aux_dim = 0;   // optional auxiliary noise input width (0 = off)
  Tensor weight;     // [m*D, m*D + aux_dim]
  Tensor bias;       // [m*D]
  mutable long forward_calls = 0;  // call-trace hook for tests

  int in_dim() const { return rows * code_dim + aux_dim; }
  int out_dim() const { return rows * code_dim; }

  // reshape(affine(vectorize(input))); aux_dim must be 0 for this overload.
  Tensor forward(const Tensor& input) const;
  // Batched [B, in_dim] -> [B, out_dim].
  Tensor forward_batch(const Tensor& input) const;

  static ShieldNet init(ShieldRole role, int rows, int code_dim, Rng& rng,
                        int aux_dim = 0);
  static ShieldNet identity(ShieldRole role, int rows, int code_dim);
  // Identity warm start with small uniform jitter: protection and
  // deprotection are mutually inverse affine maps, so starting them at the
  // identity makes the joint reconstruction objective converge quickly.
  static ShieldNet near_identity(ShieldRole role, int rows, int code_dim,
                                 Rng& rng, double jitter = 0.01,
                                 int aux_dim = 0);
  // Random rotation warm start: the weight is a uniform-ish random
  // orthogonal matrix (zero bias).  Paired with its transpose as the
  // deprotector this sits in the zero-reconstruction-cost manifold of
  // mutually inverse maps while scrambling every protected code for a
  // receiver that decodes directly.
  static ShieldNet random_orthogonal(ShieldRole role, int rows, int code_dim,
                                     Rng& rng);
  // Same geometry with the weight transposed (exact inverse of an
  // orthogonal net); bias chosen so transposed(net) undoes net exactly.
  static ShieldNet transposed(const ShieldNet& net, ShieldRole role);
};

struct Discriminator {
  int in_dim = 0;
  int hidden = 0;  // 4 * m * D by default
  Tensor w1, b1;   // [hidden, in], [hidden]
  Tensor w2, b2;   // [1, hidden], [1]

  double forward(const Tensor& sample) const;       // one vectorized sample
  std::vector<double> forward_batch(const Tensor& batch) const;  // [B, in]

  static Discriminator init(int in_dim, Rng& rng, int hidden = 0);
};

// L_D = -mean[log D(z1)] - mean[log(1 - D(z2))] over vectorized samples.
double disc_loss(const Discriminator& d, const Tensor& genuine_batch,
                 const Tensor& protected_batch);

// L_G = mean[log(1 - D(z2))].
double gen_adv_loss(const Discriminator& d, const Tensor& protected_batch);

// L_2 = MSE(z, s1) + lambda * gen_adv_loss(d, protected_batch).
double legit_loss(const Tensor& z, const Tensor& s1, const Discriminator& d,
                  const Tensor& protected_batch, double lambda);

// MSE(z, s2).
double eve_loss(const Tensor& z, const Tensor& s2);

struct TrainerConfig {
  int batch_size = 64;
  double lambda = 1e-3;
  double legit_lr = 0.02;
  double disc_lr = 0.01;
  double eve_lr = 0.02;
  double momentum = 0.9;
  int disc_steps = 1;  // discriminator updates per legitimate update
  int sched_period0 = 10;
  int sched_mult = 2;
  double train_snr_db = 20.0;
  double power = 1.0;
  bool aux_noise = false;
  std::uint64_t seed = 1;
};

struct EpochStats {
  double disc_loss = 0.0;
  double legit_loss = 0.0;
  double mse_term = 0.0;
  double adv_term = 0.0;
  double disc_accuracy = 0.0;
};

// Alternating trainer for the legitimate network.  Each batch takes one
// discriminator step on L_(1) with the protection output detached, then one
// legitimate step on L_(2) through protect -> channel -> deprotect with the
// discriminator parameters frozen.
class AdversarialTrainer {
 public:
  AdversarialTrainer(toygen::PartitionSpec spec,
                     dpmech::PrivacyMechanism mech, TrainerConfig config);

  // Training batches are drawn from pre-clipped latent codes.
  EpochStats adversarial_epoch(const std::vector<toygen::LatentCodes>& latents,
                               int epoch_index);

  const ShieldNet& protection() const { return protect_; }
  const ShieldNet& deprotection() const { return deprotect_; }
  const Discriminator& discriminator() const { return disc_; }
  ShieldNet& protection() { return protect_; }
  ShieldNet& deprotection() { return deprotect_; }
  Discriminator& discriminator() { return disc_; }

 private:
  struct BatchTensors;
  BatchTensors gather_batch(const std::vector<toygen::LatentCodes>& latents,
                            std::size_t begin, std::size_t end) const;
  void disc_step(const BatchTensors& batch, EpochStats* stats);
  void legit_step(const BatchTensors& batch, int epoch_index, int batch_index,
                  EpochStats* stats);

  toygen::PartitionSpec spec_;
  dpmech::PrivacyMechanism mech_;
  TrainerConfig config_;
  ShieldNet protect_;
  ShieldNet deprotect_;
  Discriminator disc_;
  SgdOptimizer legit_opt_;
  SgdOptimizer disc_opt_;
  Rng rng_;
};

// Stage-2 trainer: the eavesdropper fits her deprotection net against the
// frozen legitimate system, using her own guessed partition.
class EveTrainer {
 public:
  EveTrainer(toygen::PartitionSpec true_spec, toygen::PartitionSpec eve_spec,
             const ShieldNet& frozen_protection, TrainerConfig config);

  double epoch(const std::vector<toygen::LatentCodes>& latents,
               int epoch_index);

  const ShieldNet& eve_net() const { return eve_net_; }
  ShieldNet& eve_net() { return eve_net_; }

 private:
  toygen::PartitionSpec true_spec_;
  toygen::PartitionSpec eve_spec_;
  const ShieldNet& protect_;
  TrainerConfig config_;
  ShieldNet eve_net_;
  SgdOptimizer opt_;
  Rng rng_;
};

}  // namespace semwt::shield

#endif  // SEMWT_SHIELD_HPP
