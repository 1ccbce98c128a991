#include "semwt/channel.hpp"

#include <stdexcept>

namespace semwt::channel {

double power_scale(const std::vector<double>& z, double power) {
  if (power <= 0.0) throw std::invalid_argument("power constraint must be > 0");
  if (z.empty()) throw std::invalid_argument("power_scale: empty signal");
  double energy = 0.0;
  for (double v : z) energy += v * v;
  if (energy == 0.0) {
    throw std::invalid_argument("power_scale: degenerate all-zero signal");
  }
  return std::sqrt(power * static_cast<double>(z.size()) / energy);
}

std::vector<double> normalize_power(const std::vector<double>& z, double power) {
  const double scale = power_scale(z, power);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = scale * z[i];
  return out;
}

std::vector<std::complex<double>> pair_complex(const std::vector<double>& z) {
  if (z.size() % 2 != 0) {
    throw std::invalid_argument("pair_complex: odd length " +
                                std::to_string(z.size()));
  }
  std::vector<std::complex<double>> out(z.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {z[2 * k], z[2 * k + 1]};
  }
  return out;
}

std::vector<double> unpair_complex(const std::vector<std::complex<double>>& s) {
  std::vector<double> out(2 * s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    out[2 * k] = s[k].real();
    out[2 * k + 1] = s[k].imag();
  }
  return out;
}

std::vector<std::complex<double>> transmit(
    const std::vector<std::complex<double>>& symbols, const ChannelConfig& cfg,
    Rng& rng) {
  const double sigma2 = cfg.noise_variance();
  if (sigma2 == 0.0) return symbols;
  const double component_std = std::sqrt(sigma2 / 2.0);
  std::vector<std::complex<double>> out(symbols.size());
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    out[k] = symbols[k] + std::complex<double>(component_std * rng.normal(),
                                               component_std * rng.normal());
  }
  return out;
}

Tensor awgn_real(const Tensor& z, double noise_variance, Rng& rng) {
  if (noise_variance == 0.0) return z;
  const double component_std = std::sqrt(noise_variance / 2.0);
  Tensor out = z;
  for (double& v : out.vec()) v += component_std * rng.normal();
  return out;
}

}  // namespace semwt::channel
