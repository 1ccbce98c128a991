// Shared test utilities: finite-difference gradient checks, rank
// correlation, and small tensor builders.
#ifndef SEMWT_TESTS_HELPERS_HPP
#define SEMWT_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "semwt/rng.hpp"
#include "semwt/tensor.hpp"

namespace semwt::testhelp {

// Central finite difference of a scalar function at x[i].
inline double central_diff(const std::function<double(const Tensor&)>& f,
                           Tensor x, std::size_t i, double h = 1e-6) {
  const double orig = x[i];
  x[i] = orig + h;
  const double up = f(x);
  x[i] = orig - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Max relative error between analytic gradient and central differences.
inline double max_grad_rel_error(const std::function<double(const Tensor&)>& f,
                                 const Tensor& x, const Tensor& grad,
                                 double h = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = central_diff(f, x, i, h);
    const double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-8});
    worst = std::max(worst, std::fabs(fd - grad[i]) / denom);
  }
  return worst;
}

inline std::vector<double> ranks_midtie(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mid;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation with midrank ties.
inline double spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const std::vector<double> rx = ranks_midtie(x);
  const std::vector<double> ry = ranks_midtie(y);
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng,
                            double limit = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace semwt::testhelp

#endif  // SEMWT_TESTS_HELPERS_HPP
