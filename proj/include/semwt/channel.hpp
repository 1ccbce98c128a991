// AWGN wiretap channel: power normalization, real<->complex symbol pairing,
// and noise injection at a configured SNR.
//
// Noise convention: sigma^2 = P / 10^(snr_db/10) is the total noise power
// per complex symbol, i.e. sigma^2/2 per real and imaginary component.
#ifndef SEMWT_CHANNEL_HPP
#define SEMWT_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <vector>

#include "semwt/rng.hpp"
#include "semwt/tensor.hpp"

namespace semwt::channel {

struct ChannelConfig {
  double power = 1.0;   // average power constraint P
  double snr_db = 20.0;

  double noise_variance() const {
    return power / std::pow(10.0, snr_db / 10.0);
  }
};

// Scale factor sqrt(P * L / ||z||^2) making the mean square of z equal P.
double power_scale(const std::vector<double>& z, double power);

// z * power_scale(z, P).  Throws on all-zero input.
std::vector<double> normalize_power(const std::vector<double>& z, double power);

// Symbol k = (z[2k], z[2k+1]).  Throws on odd length.
std::vector<std::complex<double>> pair_complex(const std::vector<double>& z);
std::vector<double> unpair_complex(const std::vector<std::complex<double>>& s);

// y = z + n with n ~ CN(0, sigma^2): variance sigma^2/2 per component.
std::vector<std::complex<double>> transmit(
    const std::vector<std::complex<double>>& symbols, const ChannelConfig& cfg,
    Rng& rng);

// Real-path equivalent used inside training graphs: adds N(0, sigma^2/2)
// per real element.
Tensor awgn_real(const Tensor& z, double noise_variance, Rng& rng);

}  // namespace semwt::channel

#endif  // SEMWT_CHANNEL_HPP
