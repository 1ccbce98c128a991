// Gradient descent with optional momentum under a cosine annealing
// warm restarts schedule:
//   eta(t) = eta_min + 1/2 (eta0 - eta_min)(1 + cos(pi * t_cur / T_cur))
// At each restart t_cur resets to 0 and T_cur multiplies by `mult`.
#ifndef SEMWT_OPTIMIZER_HPP
#define SEMWT_OPTIMIZER_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "semwt/tensor.hpp"

namespace semwt {

struct CosineWarmRestarts {
  double eta0 = 1.0;
  double eta_min = 0.0;
  int period0 = 10;
  int mult = 2;

  int t_cur = 0;
  int period_cur = 10;

  static CosineWarmRestarts make(double eta0, double eta_min = 0.0,
                                 int period0 = 10, int mult = 2) {
    CosineWarmRestarts s;
    s.eta0 = eta0;
    s.eta_min = eta_min;
    s.period0 = period0;
    s.mult = mult;
    s.period_cur = period0;
    return s;
  }

  double rate() const {
    return eta_min + 0.5 * (eta0 - eta_min) *
                         (1.0 + std::cos(M_PI * static_cast<double>(t_cur) /
                                         static_cast<double>(period_cur)));
  }

  void advance() {
    ++t_cur;
    if (t_cur >= period_cur) {
      t_cur = 0;
      period_cur *= mult;
    }
  }
};

class SgdOptimizer {
 public:
  SgdOptimizer(CosineWarmRestarts schedule, double momentum = 0.0)
      : schedule_(schedule), momentum_(momentum) {}

  // p <- p - eta(t) * (momentum buffer folded in).  params and grads aligned.
  void step(const std::vector<Tensor*>& params,
            const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) {
      throw std::invalid_argument("optimizer step: params/grads mismatch");
    }
    if (velocity_.empty() && momentum_ > 0.0) {
      for (const Tensor* p : params) velocity_.push_back(Tensor::zeros(p->shape()));
    }
    const double eta = schedule_.rate();
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor& p = *params[k];
      const Tensor& g = *grads[k];
      if (!p.same_shape(g)) {
        throw std::invalid_argument("optimizer step: shape mismatch " +
                                    p.shape_str() + " vs " + g.shape_str());
      }
      if (momentum_ > 0.0) {
        Tensor& v = velocity_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
          v[i] = momentum_ * v[i] + g[i];
          p[i] -= eta * v[i];
        }
      } else {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= eta * g[i];
      }
    }
  }

  // Schedule is advanced once per epoch by the trainer.
  void advance_schedule() { schedule_.advance(); }
  const CosineWarmRestarts& schedule() const { return schedule_; }

 private:
  CosineWarmRestarts schedule_;
  double momentum_;
  std::vector<Tensor> velocity_;
};

}  // namespace semwt

#endif  // SEMWT_OPTIMIZER_HPP
