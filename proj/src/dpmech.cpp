#include "semwt/dpmech.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semwt/errors.hpp"

namespace semwt::dpmech {

PrivacyMechanism PrivacyMechanism::from_bounds(const ClipBounds& bounds, int n,
                                               double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("privacy budget must be > 0");
  if (n < 1) throw std::invalid_argument("element count must be >= 1");
  PrivacyMechanism mech;
  mech.sensitivity = dpmech::sensitivity(bounds, n);
  mech.epsilon = epsilon;
  mech.scale = mech.sensitivity / epsilon;
  mech.element_count = n;
  return mech;
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

ClipBounds fit_clip_bounds(const std::vector<toygen::LatentCodes>& dataset,
                           double lo_q, double hi_q) {
  if (dataset.empty()) throw std::invalid_argument("fit_clip_bounds: empty dataset");
  if (!(lo_q < hi_q) || lo_q < 0.0 || hi_q > 1.0) {
    throw std::invalid_argument("fit_clip_bounds: need 0 <= lo_q < hi_q <= 1");
  }
  std::vector<double> pooled;
  for (const toygen::LatentCodes& z : dataset) {
    pooled.insert(pooled.end(), z.codes.vec().begin(), z.codes.vec().end());
  }
  if (pooled.size() < 200) {
    throw std::invalid_argument(
        "fit_clip_bounds: need at least 200 pooled elements, got " +
        std::to_string(pooled.size()));
  }
  ClipBounds bounds;
  bounds.lo = quantile_linear(pooled, lo_q);
  bounds.hi = quantile_linear(pooled, hi_q);
  return bounds;
}

Tensor clip(const Tensor& t, const ClipBounds& bounds) {
  Tensor out = t;
  for (double& v : out.vec()) v = std::min(bounds.hi, std::max(bounds.lo, v));
  return out;
}

toygen::LatentCodes clip(const toygen::LatentCodes& z, const ClipBounds& bounds) {
  return toygen::LatentCodes(clip(z.codes, bounds), z.spec);
}

double sensitivity(const ClipBounds& bounds, int n) {
  if (n < 1) throw std::invalid_argument("sensitivity: n must be >= 1");
  return (bounds.hi - bounds.lo) * std::sqrt(static_cast<double>(n));
}

Tensor laplace_noise(const std::vector<std::size_t>& shape, double scale,
                     Rng& rng) {
  Tensor out(shape);
  if (scale != 0.0) {
    for (double& v : out.vec()) v = rng.laplace(scale);
  }
  return out;
}

Tensor laplace_perturb(const Tensor& z_private, const PrivacyMechanism& mech,
                       Rng& rng) {
  if (!std::isfinite(mech.scale)) {
    throw std::invalid_argument("laplace_perturb: scale must be finite");
  }
  Tensor out = z_private;
  if (mech.scale != 0.0) {
    for (double& v : out.vec()) v += rng.laplace(mech.scale);
  }
  return out;
}

}  // namespace semwt::dpmech
