// Utility and privacy measurement: reconstruction errors, an identity-based
// privacy success rate with a calibrated threshold, and a resemblance score
// for the learned protection noise (fresh-discriminator ROC AUC).
#ifndef SEMWT_METRICS_HPP
#define SEMWT_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "semwt/dpmech.hpp"
#include "semwt/rng.hpp"
#include "semwt/shield.hpp"
#include "semwt/tensor.hpp"
#include "semwt/toygen.hpp"

namespace semwt::metrics {

// Sample mean and standard error of the mean.
struct Aggregate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};
Aggregate aggregate(const std::vector<double>& values);

// Mean squared element-wise difference; shapes must match.
double latent_mse(const Tensor& z, const Tensor& s);
double obs_mse(const Tensor& x, const Tensor& x_hat);

// Identity feature of a reconstruction: the shared-code block recovered by
// inverting it against the fixed generator (cold start, deterministic).
// Returns the Euclidean distance of that block to the source's true shared
// block, one value per sample.
std::vector<double> identity_distances(
    const std::vector<Tensor>& reconstructions,
    const std::vector<toygen::LatentCodes>& sources,
    const toygen::GeneratorParams& gen, int invert_iters = 200,
    double invert_eta = 0.1);

// Fraction of distances strictly above tau.  Monotone non-increasing in tau.
double privacy_success_rate(const std::vector<double>& distances, double tau);

// Threshold giving a 5% success rate on noiseless direct transmission of
// matched identities: the 95th percentile of the identity distances of
// generate(Z) inverted back against the generator.
double calibrate_tau(const std::vector<toygen::LatentCodes>& sources,
                     const toygen::GeneratorParams& gen, int invert_iters = 200,
                     double invert_eta = 0.1, double quantile = 0.95);

// Mann-Whitney AUC with midrank tie handling: P(pos > neg) + 0.5 P(pos = neg).
double rank_auc(const std::vector<double>& positive_scores,
                const std::vector<double>& negative_scores);

// The probe discriminator separates classes that differ mainly in scale,
// which a sigmoid net learns only through second-order effects; it needs a
// hotter learning rate, small batches, and more epochs than the
// training-time discriminator.
struct AucConfig {
  int epochs = 200;
  int batch_size = 16;
  double lr = 0.1;
  double momentum = 0.9;
  double train_fraction = 0.5;
  std::uint64_t seed = 1;
};

// Trains a fresh discriminator (never sharing parameters with any training-
// time discriminator) on the first train_fraction of each class and reports
// ROC AUC on the held-out remainder.  Both classes are [N, dim] batches of
// vectorized private-row samples; class 1 plays the genuine-noise side.
double resemblance_auc(const Tensor& class1, const Tensor& class2,
                       const AucConfig& config);

// Sample builders for resemblance_auc, all [N, m*D] over the private rows.
Tensor genuine_laplace_samples(const std::vector<toygen::LatentCodes>& latents,
                               const dpmech::PrivacyMechanism& mech, Rng& rng);
Tensor protected_samples(const std::vector<toygen::LatentCodes>& latents,
                         const shield::ShieldNet& protection);
Tensor unperturbed_samples(const std::vector<toygen::LatentCodes>& latents);

}  // namespace semwt::metrics

#endif  // SEMWT_METRICS_HPP
