// Differential-privacy machinery: pooled quantile clipping, the L2
// sensitivity of one image's latent codes, and the Laplace mechanism that
// produces the training-time guidance sample.
#ifndef SEMWT_DPMECH_HPP
#define SEMWT_DPMECH_HPP

#include <vector>

#include "semwt/rng.hpp"
#include "semwt/tensor.hpp"
#include "semwt/toygen.hpp"

namespace semwt::dpmech {

struct ClipBounds {
  double lo = 0.0;  // 0.5% quantile a
  double hi = 0.0;  // 99.5% quantile b
};

struct PrivacyMechanism {
  double sensitivity = 0.0;  // Delta f
  double epsilon = 1.0;
  double scale = 0.0;        // Delta f / epsilon
  int element_count = 0;     // n, elements of one image's latent codes

  static PrivacyMechanism from_bounds(const ClipBounds& bounds, int n,
                                      double epsilon);
};

// Linear interpolation between order statistics; q in [0, 1].
double quantile_linear(std::vector<double> values, double q);

// 0.5% / 99.5% empirical quantiles over all latent elements pooled across
// the dataset.  Requires at least 200 pooled elements.
ClipBounds fit_clip_bounds(const std::vector<toygen::LatentCodes>& dataset,
                           double lo_q = 0.005, double hi_q = 0.995);

toygen::LatentCodes clip(const toygen::LatentCodes& z, const ClipBounds& bounds);
Tensor clip(const Tensor& t, const ClipBounds& bounds);

// Delta f = (b - a) * sqrt(n).
double sensitivity(const ClipBounds& bounds, int n);

// input + i.i.d. Laplace(0, scale) per element.
Tensor laplace_perturb(const Tensor& z_private, const PrivacyMechanism& mech,
                       Rng& rng);

Tensor laplace_noise(const std::vector<std::size_t>& shape, double scale,
                     Rng& rng);

}  // namespace semwt::dpmech

#endif  // SEMWT_DPMECH_HPP
