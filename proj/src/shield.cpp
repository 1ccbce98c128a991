#include "semwt/shield.hpp"

#include <cmath>
#include <stdexcept>

#include "semwt/errors.hpp"

namespace semwt::shield {

namespace {

double clamp_unit(double v) {
  return std::min(1.0 - kDiscOutputClamp, std::max(kDiscOutputClamp, v));
}

// Flat column positions of the given code rows in a vectorized [K*D] layout.
std::vector<std::size_t> code_positions(const std::vector<int>& rows, int d) {
  std::vector<std::size_t> out;
  out.reserve(rows.size() * d);
  for (int r : rows) {
    for (int c = 0; c < d; ++c) {
      out.push_back(static_cast<std::size_t>(r) * d + c);
    }
  }
  return out;
}

Tensor gather_columns(const Tensor& batch, const std::vector<std::size_t>& cols) {
  const std::size_t b = batch.extent(0);
  const std::size_t w = batch.extent(1);
  Tensor out({b, cols.size()});
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out[s * cols.size() + j] = batch[s * w + cols[j]];
    }
  }
  return out;
}

}  // namespace

Tensor ShieldNet::forward(const Tensor& input) const {
  if (aux_dim != 0) {
    throw std::invalid_argument("shield forward: net expects auxiliary input");
  }
  if (input.rank() != 2 || input.extent(0) != static_cast<std::size_t>(rows) ||
      input.extent(1) != static_cast<std::size_t>(code_dim)) {
    throw std::invalid_argument("shield forward: input " + input.shape_str() +
                                " does not match net [" + std::to_string(rows) +
                                "x" + std::to_string(code_dim) + "]");
  }
  ++forward_calls;
  const int n = out_dim();
  Tensor out({static_cast<std::size_t>(rows), static_cast<std::size_t>(code_dim)});
  for (int i = 0; i < n; ++i) {
    double acc = bias[i];
    const double* wr = weight.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += wr[j] * input[j];
    out[i] = acc;
  }
  out.require_finite("shield output");
  return out;
}

Tensor ShieldNet::forward_batch(const Tensor& input) const {
  if (input.rank() != 2 || input.extent(1) != static_cast<std::size_t>(in_dim())) {
    throw std::invalid_argument("shield forward_batch: input " +
                                input.shape_str() + " does not match in_dim " +
                                std::to_string(in_dim()));
  }
  ++forward_calls;
  const std::size_t b = input.extent(0);
  const int ni = in_dim();
  const int no = out_dim();
  Tensor out({b, static_cast<std::size_t>(no)});
  for (std::size_t s = 0; s < b; ++s) {
    const double* xp = input.data() + s * ni;
    double* yp = out.data() + s * no;
    for (int i = 0; i < no; ++i) {
      double acc = bias[i];
      const double* wr = weight.data() + static_cast<std::size_t>(i) * ni;
      for (int j = 0; j < ni; ++j) acc += wr[j] * xp[j];
      yp[i] = acc;
    }
  }
  out.require_finite("shield batch output");
  return out;
}

ShieldNet ShieldNet::init(ShieldRole role, int rows, int code_dim, Rng& rng,
                          int aux_dim) {
  ShieldNet net;
  net.role = role;
  net.rows = rows;
  net.code_dim = code_dim;
  net.aux_dim = aux_dim;
  const double limit = 1.0 / std::sqrt(static_cast<double>(net.in_dim()));
  net.weight = Tensor::random_uniform(
      {static_cast<std::size_t>(net.out_dim()),
       static_cast<std::size_t>(net.in_dim())},
      limit, rng);
  net.bias = Tensor::random_uniform({static_cast<std::size_t>(net.out_dim())},
                                    limit, rng);
  return net;
}

ShieldNet ShieldNet::near_identity(ShieldRole role, int rows, int code_dim,
                                   Rng& rng, double jitter, int aux_dim) {
  ShieldNet net;
  net.role = role;
  net.rows = rows;
  net.code_dim = code_dim;
  net.aux_dim = aux_dim;
  net.weight = Tensor::random_uniform(
      {static_cast<std::size_t>(net.out_dim()),
       static_cast<std::size_t>(net.in_dim())},
      jitter, rng);
  const int ni = net.in_dim();
  for (int i = 0; i < net.out_dim(); ++i) {
    net.weight[static_cast<std::size_t>(i) * ni + i] += 1.0;
  }
  net.bias = Tensor::random_uniform({static_cast<std::size_t>(net.out_dim())},
                                    jitter, rng);
  return net;
}

ShieldNet ShieldNet::random_orthogonal(ShieldRole role, int rows, int code_dim,
                                       Rng& rng) {
  ShieldNet net;
  net.role = role;
  net.rows = rows;
  net.code_dim = code_dim;
  const int n = rows * code_dim;
  // Gram-Schmidt on a Gaussian matrix.
  Tensor w({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
  for (double& v : w.vec()) v = rng.normal();
  for (int i = 0; i < n; ++i) {
    double* ri = w.data() + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < i; ++k) {
      const double* rk = w.data() + static_cast<std::size_t>(k) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += ri[j] * rk[j];
      for (int j = 0; j < n; ++j) ri[j] -= dot * rk[j];
    }
    double norm = 0.0;
    for (int j = 0; j < n; ++j) norm += ri[j] * ri[j];
    norm = std::sqrt(norm);
    if (norm < 1e-8) {
      throw std::runtime_error("orthogonal init: degenerate row");
    }
    for (int j = 0; j < n; ++j) ri[j] /= norm;
  }
  net.weight = std::move(w);
  net.bias = Tensor::zeros({static_cast<std::size_t>(n)});
  return net;
}

ShieldNet ShieldNet::transposed(const ShieldNet& net, ShieldRole role) {
  if (net.aux_dim != 0) {
    throw std::invalid_argument("transposed: auxiliary input not supported");
  }
  ShieldNet out;
  out.role = role;
  out.rows = net.rows;
  out.code_dim = net.code_dim;
  const int n = net.out_dim();
  out.weight = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.weight[static_cast<std::size_t>(i) * n + j] =
          net.weight[static_cast<std::size_t>(j) * n + i];
    }
  }
  // For orthogonal W the transpose is the inverse; undo the bias too:
  // x = W^T (Wx + b) - W^T b.
  out.bias = Tensor::zeros({static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += out.weight[static_cast<std::size_t>(i) * n + j] * net.bias[j];
    }
    out.bias[i] = -acc;
  }
  return out;
}

ShieldNet ShieldNet::identity(ShieldRole role, int rows, int code_dim) {
  ShieldNet net;
  net.role = role;
  net.rows = rows;
  net.code_dim = code_dim;
  const int n = rows * code_dim;
  net.weight = Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i) net.weight[static_cast<std::size_t>(i) * n + i] = 1.0;
  net.bias = Tensor::zeros({static_cast<std::size_t>(n)});
  return net;
}

double Discriminator::forward(const Tensor& sample) const {
  if (sample.size() != static_cast<std::size_t>(in_dim)) {
    throw std::invalid_argument("discriminator: sample size " +
                                std::to_string(sample.size()) + " != " +
                                std::to_string(in_dim));
  }
  double logit = b2[0];
  for (int h = 0; h < hidden; ++h) {
    double pre = b1[h];
    const double* wr = w1.data() + static_cast<std::size_t>(h) * in_dim;
    for (int j = 0; j < in_dim; ++j) pre += wr[j] * sample[j];
    logit += w2[h] * (1.0 / (1.0 + std::exp(-pre)));
  }
  return clamp_unit(1.0 / (1.0 + std::exp(-logit)));
}

std::vector<double> Discriminator::forward_batch(const Tensor& batch) const {
  const std::size_t b = batch.extent(0);
  std::vector<double> out(b);
  for (std::size_t s = 0; s < b; ++s) {
    Tensor row({static_cast<std::size_t>(in_dim)},
               std::vector<double>(batch.data() + s * in_dim,
                                   batch.data() + (s + 1) * in_dim));
    out[s] = forward(row);
  }
  return out;
}

Discriminator Discriminator::init(int in_dim, Rng& rng, int hidden) {
  Discriminator d;
  d.in_dim = in_dim;
  d.hidden = hidden > 0 ? hidden : 4 * in_dim;
  const double l1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double l2 = 1.0 / std::sqrt(static_cast<double>(d.hidden));
  d.w1 = Tensor::random_uniform(
      {static_cast<std::size_t>(d.hidden), static_cast<std::size_t>(in_dim)},
      l1, rng);
  d.b1 = Tensor::random_uniform({static_cast<std::size_t>(d.hidden)}, l1, rng);
  d.w2 = Tensor::random_uniform({1, static_cast<std::size_t>(d.hidden)}, l2, rng);
  d.b2 = Tensor::random_uniform({1}, l2, rng);
  return d;
}

double disc_loss(const Discriminator& d, const Tensor& genuine_batch,
                 const Tensor& protected_batch) {
  if (genuine_batch.extent(0) == 0 || protected_batch.extent(0) == 0) {
    throw std::invalid_argument("disc_loss: empty batch");
  }
  double acc = 0.0;
  const std::vector<double> d1 = d.forward_batch(genuine_batch);
  const std::vector<double> d2 = d.forward_batch(protected_batch);
  for (double v : d1) acc -= std::log(v) / static_cast<double>(d1.size());
  for (double v : d2) acc -= std::log(1.0 - v) / static_cast<double>(d2.size());
  return acc;
}

double gen_adv_loss(const Discriminator& d, const Tensor& protected_batch) {
  if (protected_batch.extent(0) == 0) {
    throw std::invalid_argument("gen_adv_loss: empty batch");
  }
  double acc = 0.0;
  const std::vector<double> d2 = d.forward_batch(protected_batch);
  for (double v : d2) acc += std::log(1.0 - v) / static_cast<double>(d2.size());
  return acc;
}

double legit_loss(const Tensor& z, const Tensor& s1, const Discriminator& d,
                  const Tensor& protected_batch, double lambda) {
  return eve_loss(z, s1) + lambda * gen_adv_loss(d, protected_batch);
}

double eve_loss(const Tensor& z, const Tensor& s2) {
  if (!z.same_shape(s2)) {
    throw std::invalid_argument("mse loss: shape mismatch " + z.shape_str() +
                                " vs " + s2.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double dd = z[i] - s2[i];
    acc += dd * dd;
  }
  return acc / static_cast<double>(z.size());
}

struct AdversarialTrainer::BatchTensors {
  Tensor full;    // [B, K*D]
  Tensor priv;    // [B, m*D]
  Tensor common;  // [B, c*D]
};

AdversarialTrainer::AdversarialTrainer(toygen::PartitionSpec spec,
                                       dpmech::PrivacyMechanism mech,
                                       TrainerConfig config)
    : spec_(std::move(spec)),
      mech_(mech),
      config_(config),
      protect_(ShieldNet()),
      deprotect_(ShieldNet()),
      disc_(Discriminator()),
      legit_opt_(CosineWarmRestarts::make(config.legit_lr, 0.0,
                                          config.sched_period0,
                                          config.sched_mult),
                 config.momentum),
      disc_opt_(CosineWarmRestarts::make(config.disc_lr, 0.0,
                                         config.sched_period0,
                                         config.sched_mult),
                config.momentum),
      rng_(stream_id(config.seed, "shield/train")) {
  spec_.validate();
  const int m = spec_.private_count();
  const int d = spec_.code_dim;
  Rng init_rng(stream_id(config.seed, "shield/init"));
  if (config.aux_noise) {
    protect_ = ShieldNet::near_identity(ShieldRole::kProtection, m, d,
                                        init_rng, 0.01, m * d);
    deprotect_ = ShieldNet::near_identity(ShieldRole::kDeprotectionLegit, m, d,
                                          init_rng);
  } else {
    // Scale-calibrated rotation warm start.  The adversarial optimum for the
    // protection is a distribution match with the genuine guidance sample
    // z + Laplace(b), whose per-element variance is Var(z) + 2b^2.  Starting
    // the generator far from that distribution stalls training (confident
    // discriminator, vanishing log(1 - D) gradients), so the game begins at
    // the variance-matched point of its own equilibrium: a random rotation
    // scaled by g = sqrt(1 + 2 b^2), with the exact inverse as the
    // deprotector.  Training then refines the noise shape from there.
    const double g = std::min(
        std::sqrt(1.0 + 2.0 * mech_.scale * mech_.scale), kProtectionGainCap);
    protect_ =
        ShieldNet::random_orthogonal(ShieldRole::kProtection, m, d, init_rng);
    deprotect_ =
        ShieldNet::transposed(protect_, ShieldRole::kDeprotectionLegit);
    for (std::size_t i = 0; i < protect_.weight.size(); ++i) {
      protect_.weight[i] *= g;
      deprotect_.weight[i] /= g;
    }
  }
  disc_ = Discriminator::init(m * d, init_rng);
}

AdversarialTrainer::BatchTensors AdversarialTrainer::gather_batch(
    const std::vector<toygen::LatentCodes>& latents, std::size_t begin,
    std::size_t end) const {
  const int d = spec_.code_dim;
  const std::size_t kd = static_cast<std::size_t>(spec_.total_codes) * d;
  const std::vector<std::size_t> priv_cols =
      code_positions(spec_.private_indices, d);
  const std::vector<std::size_t> comm_cols =
      code_positions(spec_.common_indices(), d);
  BatchTensors batch;
  batch.full = Tensor({end - begin, kd});
  for (std::size_t s = begin; s < end; ++s) {
    const Tensor& codes = latents[s].codes;
    for (std::size_t j = 0; j < kd; ++j) {
      batch.full[(s - begin) * kd + j] = codes[j];
    }
  }
  batch.priv = gather_columns(batch.full, priv_cols);
  batch.common = gather_columns(batch.full, comm_cols);
  return batch;
}

void AdversarialTrainer::disc_step(const BatchTensors& batch,
                                   EpochStats* stats) {
  const std::size_t b = batch.priv.extent(0);
  const std::size_t md = batch.priv.extent(1);

  // Genuine class: fresh Laplace guidance sample, recomputed per batch.
  Tensor z1 = batch.priv;
  for (double& v : z1.vec()) v += rng_.laplace(mech_.scale);

  // Protection output treated as constant (detach rule).
  Tensor z2_in = batch.priv;
  if (protect_.aux_dim > 0) {
    Tensor with_aux({b, md + static_cast<std::size_t>(protect_.aux_dim)});
    for (std::size_t s = 0; s < b; ++s) {
      for (std::size_t j = 0; j < md; ++j) {
        with_aux[s * (md + protect_.aux_dim) + j] = z2_in[s * md + j];
      }
      for (int j = 0; j < protect_.aux_dim; ++j) {
        with_aux[s * (md + protect_.aux_dim) + md + j] =
            rng_.laplace(mech_.scale);
      }
    }
    z2_in = std::move(with_aux);
  }
  const Tensor z2 = protect_.forward_batch(z2_in);

  Tape tape;
  const Tape::Id w1 = tape.input(disc_.w1);
  const Tape::Id b1 = tape.input(disc_.b1);
  const Tape::Id w2 = tape.input(disc_.w2);
  const Tape::Id b2 = tape.input(disc_.b2);
  auto disc_forward = [&](const Tensor& x) {
    const Tape::Id in = tape.input(x);
    const Tape::Id h = tape.sigmoid(tape.affine(in, w1, b1));
    const Tape::Id logit = tape.affine(h, w2, b2);
    return tape.clamp(tape.sigmoid(logit), kDiscOutputClamp,
                      1.0 - kDiscOutputClamp);
  };
  const Tape::Id d1 = disc_forward(z1);
  const Tape::Id d2 = disc_forward(z2);
  const Tape::Id ones1 = tape.input(Tensor::full(tape.value(d2).shape(), 1.0));
  const Tape::Id one_minus_d2 = tape.add(ones1, tape.scale(d2, -1.0));
  const Tape::Id loss =
      tape.add(tape.scale(tape.mean(tape.log(d1)), -1.0),
               tape.scale(tape.mean(tape.log(one_minus_d2)), -1.0));
  tape.backward(loss);

  // Accuracy on this batch before the update.
  double correct = 0.0;
  for (std::size_t s = 0; s < b; ++s) {
    if (tape.value(d1)[s] > 0.5) correct += 1.0;
    if (tape.value(d2)[s] < 0.5) correct += 1.0;
  }
  stats->disc_accuracy += correct / static_cast<double>(2 * b);
  stats->disc_loss += tape.value(loss)[0];

  disc_opt_.step({&disc_.w1, &disc_.b1, &disc_.w2, &disc_.b2},
                 {&tape.grad(w1), &tape.grad(b1), &tape.grad(w2),
                  &tape.grad(b2)});
}

void AdversarialTrainer::legit_step(const BatchTensors& batch, int epoch_index,
                                    int batch_index, EpochStats* stats) {
  const std::size_t b = batch.priv.extent(0);
  const std::size_t md = batch.priv.extent(1);
  const std::size_t cd = batch.common.extent(1);
  const std::size_t kd = md + cd;
  const double sigma2 = channel::ChannelConfig{config_.power,
                                               config_.train_snr_db}
                            .noise_variance();
  const double comp_std = std::sqrt(sigma2 / 2.0);

  try {
    Tape tape;
    const Tape::Id wp = tape.input(protect_.weight);
    const Tape::Id bp = tape.input(protect_.bias);
    const Tape::Id wd = tape.input(deprotect_.weight);
    const Tape::Id bd = tape.input(deprotect_.bias);

    Tensor protect_in = batch.priv;
    if (protect_.aux_dim > 0) {
      Tensor with_aux({b, md + static_cast<std::size_t>(protect_.aux_dim)});
      for (std::size_t s = 0; s < b; ++s) {
        for (std::size_t j = 0; j < md; ++j) {
          with_aux[s * (md + protect_.aux_dim) + j] = batch.priv[s * md + j];
        }
        for (int j = 0; j < protect_.aux_dim; ++j) {
          with_aux[s * (md + protect_.aux_dim) + md + j] =
              rng_.laplace(mech_.scale);
        }
      }
      protect_in = std::move(with_aux);
    }
    const Tape::Id priv_in = tape.input(protect_in);
    const Tape::Id priv_target = tape.input(batch.priv);
    const Tape::Id z2p = tape.affine(priv_in, wp, bp);  // [B, mD]

    // Per-sample power normalization over the full transmitted vector,
    // applied as a constant (the scale is public to both receivers).
    const Tensor& z2p_val = tape.value(z2p);
    std::vector<double> alpha(b);
    for (std::size_t s = 0; s < b; ++s) {
      double energy = 0.0;
      for (std::size_t j = 0; j < md; ++j) {
        energy += z2p_val[s * md + j] * z2p_val[s * md + j];
      }
      for (std::size_t j = 0; j < cd; ++j) {
        energy += batch.common[s * cd + j] * batch.common[s * cd + j];
      }
      alpha[s] = std::sqrt(config_.power * static_cast<double>(kd) /
                           std::max(energy, 1e-300));
    }
    Tensor alpha_b({b, md});
    Tensor inv_alpha_b({b, md});
    for (std::size_t s = 0; s < b; ++s) {
      for (std::size_t j = 0; j < md; ++j) {
        alpha_b[s * md + j] = alpha[s];
        inv_alpha_b[s * md + j] = 1.0 / alpha[s];
      }
    }

    // Fresh channel noise for this batch; private columns go on the tape,
    // the common columns contribute a constant MSE term.
    Tensor noise_priv({b, md});
    for (double& v : noise_priv.vec()) v = comp_std * rng_.normal();
    double common_mse = 0.0;
    for (std::size_t s = 0; s < b; ++s) {
      for (std::size_t j = 0; j < cd; ++j) {
        const double n = comp_std * rng_.normal() / alpha[s];
        common_mse += n * n;
      }
    }
    common_mse /= static_cast<double>(b * std::max<std::size_t>(cd, 1));

    const Tape::Id tx = tape.scale(z2p, alpha_b);
    const Tape::Id rx = tape.add(tx, tape.input(noise_priv));
    const Tape::Id denorm = tape.scale(rx, inv_alpha_b);
    const Tape::Id s1_priv = tape.affine(denorm, wd, bd);
    const Tape::Id mse_priv = tape.mean(tape.sqdiff(s1_priv, priv_target));

    // Full-latent MSE = weighted private + common parts.
    const double w_priv = static_cast<double>(md) / static_cast<double>(kd);
    const double w_comm = static_cast<double>(cd) / static_cast<double>(kd);
    const Tape::Id mse_full =
        tape.add(tape.scale(mse_priv, w_priv),
                 tape.input(Tensor::scalar(w_comm * common_mse)));

    // Adversarial term through the frozen discriminator.
    const Tape::Id w1 = tape.input(disc_.w1);
    const Tape::Id b1 = tape.input(disc_.b1);
    const Tape::Id w2 = tape.input(disc_.w2);
    const Tape::Id b2 = tape.input(disc_.b2);
    const Tape::Id h = tape.sigmoid(tape.affine(z2p, w1, b1));
    const Tape::Id d2 = tape.clamp(tape.sigmoid(tape.affine(h, w2, b2)),
                                   kDiscOutputClamp, 1.0 - kDiscOutputClamp);
    const Tape::Id ones = tape.input(Tensor::full(tape.value(d2).shape(), 1.0));
    const Tape::Id adv =
        tape.mean(tape.log(tape.add(ones, tape.scale(d2, -1.0))));

    const Tape::Id loss = tape.add(mse_full, tape.scale(adv, config_.lambda));
    tape.backward(loss);

    stats->legit_loss += tape.value(loss)[0];
    stats->mse_term += tape.value(mse_full)[0];
    stats->adv_term += tape.value(adv)[0];

    // Precondition the deprotector's weight gradient by its input second
    // moment: the denormalized received signal carries the protected scale
    // (variance ~ 1 + 2 b^2), so without this the shared learning rate blows
    // up the small-epsilon cells.
    const double precond =
        1.0 / std::min(1.0 + 2.0 * mech_.scale * mech_.scale,
                       kProtectionGainCap * kProtectionGainCap);
    Tensor gwd = tape.grad(wd);
    for (double& v : gwd.vec()) v *= precond;

    legit_opt_.step({&protect_.weight, &protect_.bias, &deprotect_.weight,
                     &deprotect_.bias},
                    {&tape.grad(wp), &tape.grad(bp), &gwd, &tape.grad(bd)});
  } catch (const std::runtime_error& e) {
    throw TrainingDiverged("training diverged at epoch " +
                               std::to_string(epoch_index) + " batch " +
                               std::to_string(batch_index) + ": " + e.what(),
                           epoch_index, batch_index);
  }
}

EpochStats AdversarialTrainer::adversarial_epoch(
    const std::vector<toygen::LatentCodes>& latents, int epoch_index) {
  if (latents.empty()) {
    throw std::invalid_argument("adversarial_epoch: empty dataset");
  }
  EpochStats stats;
  int batches = 0;
  for (std::size_t begin = 0; begin < latents.size();
       begin += config_.batch_size) {
    const std::size_t end =
        std::min(latents.size(), begin + static_cast<std::size_t>(config_.batch_size));
    const BatchTensors batch = gather_batch(latents, begin, end);
    // Extra discriminator updates keep it near its best response, so it can
    // both pull the protection toward the guidance distribution and push
    // back on overshoot; only the last update is logged.
    EpochStats warmup;
    for (int k = 1; k < config_.disc_steps; ++k) disc_step(batch, &warmup);
    disc_step(batch, &stats);
    legit_step(batch, epoch_index, batches, &stats);
    ++batches;
  }
  stats.disc_loss /= batches;
  stats.legit_loss /= batches;
  stats.mse_term /= batches;
  stats.adv_term /= batches;
  stats.disc_accuracy /= batches;
  legit_opt_.advance_schedule();
  disc_opt_.advance_schedule();
  return stats;
}

EveTrainer::EveTrainer(toygen::PartitionSpec true_spec,
                       toygen::PartitionSpec eve_spec,
                       const ShieldNet& frozen_protection, TrainerConfig config)
    : true_spec_(std::move(true_spec)),
      eve_spec_(std::move(eve_spec)),
      protect_(frozen_protection),
      config_(config),
      eve_net_(ShieldNet()),
      opt_(CosineWarmRestarts::make(config.eve_lr, 0.0, config.sched_period0,
                                    config.sched_mult),
           config.momentum),
      rng_(stream_id(config.seed, "shield/eve-train")) {
  true_spec_.validate();
  eve_spec_.validate();
  Rng init_rng(stream_id(config.seed, "shield/eve-init"));
  eve_net_ = ShieldNet::near_identity(ShieldRole::kDeprotectionEve,
                                      eve_spec_.private_count(),
                                      eve_spec_.code_dim, init_rng);
}

double EveTrainer::epoch(const std::vector<toygen::LatentCodes>& latents,
                         int epoch_index) {
  if (latents.empty()) throw std::invalid_argument("eve epoch: empty dataset");
  const int d = true_spec_.code_dim;
  const std::size_t kd = static_cast<std::size_t>(true_spec_.total_codes) * d;
  const std::vector<std::size_t> true_priv =
      code_positions(true_spec_.private_indices, d);
  const std::vector<std::size_t> guess_cols =
      code_positions(eve_spec_.private_indices, d);
  std::vector<bool> guessed(kd, false);
  for (std::size_t c : guess_cols) guessed[c] = true;
  const double sigma2 = channel::ChannelConfig{config_.power,
                                               config_.train_snr_db}
                            .noise_variance();
  const double comp_std = std::sqrt(sigma2 / 2.0);

  double total_loss = 0.0;
  int batches = 0;
  for (std::size_t begin = 0; begin < latents.size();
       begin += config_.batch_size) {
    const std::size_t end =
        std::min(latents.size(), begin + static_cast<std::size_t>(config_.batch_size));
    const std::size_t b = end - begin;

    // Frozen legitimate transmitter: protect true-private rows, renormalize,
    // pass through Eve's channel, and undo the (public) normalization.
    Tensor rx({b, kd});
    double unguessed_sse = 0.0;
    for (std::size_t s = 0; s < b; ++s) {
      const Tensor& codes = latents[begin + s].codes;
      Tensor priv({1, true_priv.size()});
      for (std::size_t j = 0; j < true_priv.size(); ++j) {
        priv[j] = codes[true_priv[j]];
      }
      const Tensor z2p = protect_.forward_batch(priv);
      std::vector<double> z2(codes.vec());
      for (std::size_t j = 0; j < true_priv.size(); ++j) {
        z2[true_priv[j]] = z2p[j];
      }
      double energy = 0.0;
      for (double v : z2) energy += v * v;
      const double alpha = std::sqrt(config_.power * static_cast<double>(kd) /
                                     std::max(energy, 1e-300));
      for (std::size_t j = 0; j < kd; ++j) {
        const double y = alpha * z2[j] + comp_std * rng_.normal();
        rx[s * kd + j] = y / alpha;
      }
      for (std::size_t j = 0; j < kd; ++j) {
        if (!guessed[j]) {
          const double dd = rx[s * kd + j] - codes[j];
          unguessed_sse += dd * dd;
        }
      }
    }

    Tensor guess_in({b, guess_cols.size()});
    Tensor guess_target({b, guess_cols.size()});
    for (std::size_t s = 0; s < b; ++s) {
      for (std::size_t j = 0; j < guess_cols.size(); ++j) {
        guess_in[s * guess_cols.size() + j] = rx[s * kd + guess_cols[j]];
        guess_target[s * guess_cols.size() + j] =
            latents[begin + s].codes[guess_cols[j]];
      }
    }

    try {
      Tape tape;
      const Tape::Id we = tape.input(eve_net_.weight);
      const Tape::Id be = tape.input(eve_net_.bias);
      const Tape::Id s2_guess =
          tape.affine(tape.input(guess_in), we, be);
      const Tape::Id mse_guess =
          tape.mean(tape.sqdiff(s2_guess, tape.input(guess_target)));
      const double w_guess =
          static_cast<double>(guess_cols.size()) / static_cast<double>(kd);
      const double other_mse =
          unguessed_sse / static_cast<double>(b * (kd - guess_cols.size()));
      const Tape::Id loss = tape.add(
          tape.scale(mse_guess, w_guess),
          tape.input(Tensor::scalar((1.0 - w_guess) * other_mse)));
      tape.backward(loss);
      total_loss += tape.value(loss)[0];
      opt_.step({&eve_net_.weight, &eve_net_.bias},
                {&tape.grad(we), &tape.grad(be)});
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged("eve training diverged at epoch " +
                                 std::to_string(epoch_index) + " batch " +
                                 std::to_string(batches) + ": " + e.what(),
                             epoch_index, batches);
    }
    ++batches;
  }
  opt_.advance_schedule();
  return total_loss / batches;
}

}  // namespace semwt::shield
