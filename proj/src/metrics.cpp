#include "semwt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "semwt/autodiff.hpp"
#include "semwt/optimizer.hpp"

namespace semwt::metrics {

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate: empty sample");
  Aggregate out;
  out.n = values.size();
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double var = ss / static_cast<double>(out.n - 1);
    out.se = std::sqrt(var / static_cast<double>(out.n));
  }
  return out;
}

double latent_mse(const Tensor& z, const Tensor& s) {
  if (!z.same_shape(s)) {
    throw std::invalid_argument("latent_mse: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - s[i];
    acc += d * d;
  }
  return acc / static_cast<double>(z.size());
}

double obs_mse(const Tensor& x, const Tensor& x_hat) {
  return latent_mse(x, x_hat);
}

namespace {

double shared_block_distance(const Tensor& a, const Tensor& b,
                             const toygen::PartitionSpec& spec) {
  const std::size_t count =
      static_cast<std::size_t>(spec.shared_count) * spec.code_dim;
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

std::vector<double> identity_distances(
    const std::vector<Tensor>& reconstructions,
    const std::vector<toygen::LatentCodes>& sources,
    const toygen::GeneratorParams& gen, int invert_iters, double invert_eta) {
  if (reconstructions.size() != sources.size()) {
    throw std::invalid_argument("identity_distances: size mismatch");
  }
  if (reconstructions.empty()) {
    throw std::invalid_argument("identity_distances: empty sample");
  }
  std::vector<double> out;
  out.reserve(reconstructions.size());
  for (std::size_t i = 0; i < reconstructions.size(); ++i) {
    const toygen::LatentCodes inverted =
        toygen::invert(reconstructions[i], gen, invert_iters, invert_eta);
    out.push_back(shared_block_distance(inverted.codes, sources[i].codes,
                                        gen.spec));
  }
  return out;
}

double privacy_success_rate(const std::vector<double>& distances, double tau) {
  if (distances.empty()) {
    throw std::invalid_argument("privacy_success_rate: empty sample");
  }
  std::size_t hits = 0;
  for (double d : distances) {
    if (d > tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(distances.size());
}

double calibrate_tau(const std::vector<toygen::LatentCodes>& sources,
                     const toygen::GeneratorParams& gen, int invert_iters,
                     double invert_eta, double quantile) {
  std::vector<Tensor> recons;
  recons.reserve(sources.size());
  for (const toygen::LatentCodes& z : sources) {
    recons.push_back(toygen::generate(z, gen));
  }
  const std::vector<double> distances =
      identity_distances(recons, sources, gen, invert_iters, invert_eta);
  return dpmech::quantile_linear(distances, quantile);
}

double rank_auc(const std::vector<double>& positive_scores,
                const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw std::invalid_argument("rank_auc: empty class");
  }
  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> all;
  all.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) all.push_back({s, true});
  for (double s : negative_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });
  // Midrank sum of the positive class (handles ties).
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j));  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].positive) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(positive_scores.size());
  const double nn = static_cast<double>(negative_scores.size());
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

namespace {

Tensor rows_slice(const Tensor& batch, std::size_t begin, std::size_t end) {
  const std::size_t dim = batch.shape()[1];
  Tensor out({end - begin, dim});
  std::copy(batch.vec().begin() + static_cast<std::ptrdiff_t>(begin * dim),
            batch.vec().begin() + static_cast<std::ptrdiff_t>(end * dim),
            out.vec().begin());
  return out;
}

// One SGD step of the discriminator loss
// -mean[log d(z1)] - mean[log(1 - d(z2))] over the given batches.
double disc_train_step(shield::Discriminator* disc, const Tensor& z1,
                       const Tensor& z2, SgdOptimizer* opt) {
  Tape tape;
  const Tape::Id w1 = tape.input(disc->w1);
  const Tape::Id b1 = tape.input(disc->b1);
  const Tape::Id w2 = tape.input(disc->w2);
  const Tape::Id b2 = tape.input(disc->b2);
  const auto score = [&](const Tensor& batch) {
    const Tape::Id h = tape.sigmoid(tape.affine(tape.input(batch), w1, b1));
    return tape.clamp(tape.sigmoid(tape.affine(h, w2, b2)),
                      shield::kDiscOutputClamp,
                      1.0 - shield::kDiscOutputClamp);
  };
  const Tape::Id d1 = score(z1);
  const Tape::Id d2 = score(z2);
  const Tape::Id term1 = tape.scale(tape.mean(tape.log(d1)), -1.0);
  const Tape::Id ones = tape.input(Tensor::full(tape.value(d2).shape(), 1.0));
  const Tape::Id one_minus = tape.add(ones, tape.scale(d2, -1.0));
  const Tape::Id term2 = tape.scale(tape.mean(tape.log(one_minus)), -1.0);
  const Tape::Id loss = tape.add(term1, term2);
  tape.backward(loss);
  opt->step({&disc->w1, &disc->b1, &disc->w2, &disc->b2},
            {&tape.grad(w1), &tape.grad(b1), &tape.grad(w2), &tape.grad(b2)});
  return tape.value(loss)[0];
}

}  // namespace

double resemblance_auc(const Tensor& class1, const Tensor& class2,
                       const AucConfig& config) {
  if (class1.shape().size() != 2 || class2.shape().size() != 2 ||
      class1.shape()[1] != class2.shape()[1]) {
    throw std::invalid_argument("resemblance_auc: expect [N, dim] batches");
  }
  const std::size_t dim = class1.shape()[1];
  const std::size_t n1 = class1.shape()[0];
  const std::size_t n2 = class2.shape()[0];
  const std::size_t t1 = static_cast<std::size_t>(
      config.train_fraction * static_cast<double>(n1));
  const std::size_t t2 = static_cast<std::size_t>(
      config.train_fraction * static_cast<double>(n2));
  if (t1 == 0 || t2 == 0 || t1 == n1 || t2 == n2) {
    throw std::invalid_argument("resemblance_auc: split leaves a class empty");
  }
  Rng init_rng(stream_id(config.seed, "metrics/fresh-disc"));
  shield::Discriminator disc =
      shield::Discriminator::init(static_cast<int>(dim), init_rng);
  SgdOptimizer opt(CosineWarmRestarts::make(config.lr, 0.0, 10, 2),
                   config.momentum);
  const std::size_t train = std::min(t1, t2);
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t begin = 0; begin < train; begin += bs) {
      const std::size_t end = std::min(train, begin + bs);
      disc_train_step(&disc, rows_slice(class1, begin, end),
                      rows_slice(class2, begin, end), &opt);
    }
    opt.advance_schedule();
  }
  const std::vector<double> pos =
      disc.forward_batch(rows_slice(class1, t1, n1));
  const std::vector<double> neg =
      disc.forward_batch(rows_slice(class2, t2, n2));
  return rank_auc(pos, neg);
}

namespace {

Tensor stack_private_rows(const std::vector<toygen::LatentCodes>& latents,
                          const std::function<Tensor(const Tensor&)>& map) {
  if (latents.empty()) {
    throw std::invalid_argument("sample builder: empty latent set");
  }
  const toygen::PartitionSpec& spec = latents.front().spec;
  const std::size_t md =
      static_cast<std::size_t>(spec.private_count()) * spec.code_dim;
  Tensor out({latents.size(), md});
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const Tensor priv = map(toygen::split(latents[i]).first);
    if (priv.size() != md) {
      throw std::invalid_argument("sample builder: row size mismatch");
    }
    std::copy(priv.vec().begin(), priv.vec().end(),
              out.vec().begin() + static_cast<std::ptrdiff_t>(i * md));
  }
  return out;
}

}  // namespace

Tensor genuine_laplace_samples(const std::vector<toygen::LatentCodes>& latents,
                               const dpmech::PrivacyMechanism& mech, Rng& rng) {
  return stack_private_rows(latents, [&](const Tensor& priv) {
    return dpmech::laplace_perturb(priv, mech, rng);
  });
}

Tensor protected_samples(const std::vector<toygen::LatentCodes>& latents,
                         const shield::ShieldNet& protection) {
  return stack_private_rows(latents, [&](const Tensor& priv) {
    return protection.forward(priv);
  });
}

Tensor unperturbed_samples(const std::vector<toygen::LatentCodes>& latents) {
  return stack_private_rows(latents,
                            [](const Tensor& priv) { return priv; });
}

}  // namespace semwt::metrics
