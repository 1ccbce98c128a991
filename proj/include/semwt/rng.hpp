// Seeded RNG streams with platform-independent output.
//
// std::normal_distribution and friends are implementation-defined, so all
// samplers here are hand-rolled on top of mt19937_64 to keep experiment
// output byte-reproducible across standard libraries.
#ifndef SEMWT_RNG_HPP
#define SEMWT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace semwt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over a label, folded with the master seed. Stream ids for sweep
// cells are derived as hash(master, "sweep/<scheme>/s<j>/<role>").
inline std::uint64_t stream_id(std::uint64_t master, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (-1/2, 1/2), excluding the endpoints so log(1-2|u|) is finite.
  double uniform_half_open() {
    double u;
    do {
      u = uniform() - 0.5;
    } while (u == -0.5 || u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Laplace(0, scale) by inverse CDF: u ~ U(-1/2, 1/2),
  // x = -scale * sign(u) * ln(1 - 2|u|).
  double laplace(double scale) {
    const double u = uniform_half_open();
    const double s = u < 0.0 ? -1.0 : 1.0;
    return -scale * s * std::log(1.0 - 2.0 * std::fabs(u));
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace semwt

#endif  // SEMWT_RNG_HPP
