#include "semwt/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace semwt {

Tape::Id Tape::push(Node n) {
  n.value.require_finite("tape forward value");
  n.adjoint = Tensor::zeros(n.value.shape());
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Tape::Id Tape::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::affine(Id x, Id w, Id b) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& wv = nodes_[w].value;
  const Tensor& bv = nodes_[b].value;
  if (wv.rank() != 2) {
    throw std::invalid_argument("affine: weight must be rank 2, got " +
                                wv.shape_str());
  }
  const std::size_t n_out = wv.extent(0);
  const std::size_t n_in = wv.extent(1);
  if (bv.size() != n_out) {
    throw std::invalid_argument("affine: bias " + bv.shape_str() +
                                " does not match weight " + wv.shape_str());
  }
  const bool batched = xv.rank() == 2;
  const std::size_t batch = batched ? xv.extent(0) : 1;
  const std::size_t x_cols = batched ? xv.extent(1) : xv.size();
  if (x_cols != n_in || (!batched && xv.rank() != 1)) {
    throw std::invalid_argument("affine: input " + xv.shape_str() +
                                " does not match weight " + wv.shape_str());
  }
  Tensor out = batched ? Tensor::zeros({batch, n_out}) : Tensor::zeros({n_out});
  for (std::size_t s = 0; s < batch; ++s) {
    const double* xp = xv.data() + s * n_in;
    double* yp = out.data() + s * n_out;
    for (std::size_t i = 0; i < n_out; ++i) {
      double acc = bv[i];
      const double* wr = wv.data() + i * n_in;
      for (std::size_t j = 0; j < n_in; ++j) acc += wr[j] * xp[j];
      yp[i] = acc;
    }
  }
  Node n;
  n.op = Op::kAffine;
  n.inputs = {x, w, b};
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (!av.same_shape(bv)) {
    throw std::invalid_argument("add: shape mismatch " + av.shape_str() +
                                " vs " + bv.shape_str());
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double c) {
  const Tensor& av = nodes_[a].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
  Node n;
  n.op = Op::kScale;
  n.inputs = {a};
  n.value = std::move(out);
  n.c0 = c;
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, Tensor c) {
  const Tensor& av = nodes_[a].value;
  if (!av.same_shape(c)) {
    throw std::invalid_argument("scale: constant shape " + c.shape_str() +
                                " mismatches input " + av.shape_str());
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c[i] * av[i];
  Node n;
  n.op = Op::kScaleElem;
  n.inputs = {a};
  n.value = std::move(out);
  n.elem_scale = std::move(c);
  return push(std::move(n));
}

Tape::Id Tape::sigmoid(Id a) {
  const Tensor& av = nodes_[a].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  }
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {a};
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::log(Id a) {
  const Tensor& av = nodes_[a].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(av[i]);
  Node n;
  n.op = Op::kLog;
  n.inputs = {a};
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::mean(Id a) {
  const Tensor& av = nodes_[a].value;
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
  Node n;
  n.op = Op::kMean;
  n.inputs = {a};
  n.value = Tensor::scalar(acc / static_cast<double>(av.size()));
  return push(std::move(n));
}

Tape::Id Tape::sqdiff(Id a, Id b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (!av.same_shape(bv)) {
    throw std::invalid_argument("sqdiff: shape mismatch " + av.shape_str() +
                                " vs " + bv.shape_str());
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = av[i] - bv[i];
    out[i] = d * d;
  }
  Node n;
  n.op = Op::kSqDiff;
  n.inputs = {a, b};
  n.value = std::move(out);
  return push(std::move(n));
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
  const Tensor& av = nodes_[a].value;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(hi, std::max(lo, av[i]));
  }
  Node n;
  n.op = Op::kClamp;
  n.inputs = {a};
  n.value = std::move(out);
  n.c0 = lo;
  n.c1 = hi;
  return push(std::move(n));
}

void Tape::backward(Id root) {
  if (root >= nodes_.size()) throw std::invalid_argument("backward: bad root");
  if (nodes_[root].value.size() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                nodes_[root].value.shape_str());
  }
  for (Node& n : nodes_) {
    for (double& g : n.adjoint.vec()) g = 0.0;
  }
  nodes_[root].adjoint[0] = 1.0;

  for (std::size_t idx = root + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    const Tensor& g = n.adjoint;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kAffine: {
        Node& xn = nodes_[n.inputs[0]];
        Node& wn = nodes_[n.inputs[1]];
        Node& bn = nodes_[n.inputs[2]];
        const std::size_t n_out = wn.value.extent(0);
        const std::size_t n_in = wn.value.extent(1);
        const std::size_t batch = xn.value.rank() == 2 ? xn.value.extent(0) : 1;
        for (std::size_t s = 0; s < batch; ++s) {
          const double* gp = g.data() + s * n_out;
          const double* xp = xn.value.data() + s * n_in;
          double* gx = xn.adjoint.data() + s * n_in;
          for (std::size_t i = 0; i < n_out; ++i) {
            const double gi = gp[i];
            if (gi == 0.0) continue;
            const double* wr = wn.value.data() + i * n_in;
            double* gw = wn.adjoint.data() + i * n_in;
            for (std::size_t j = 0; j < n_in; ++j) {
              gx[j] += wr[j] * gi;
              gw[j] += xp[j] * gi;
            }
            bn.adjoint[i] += gi;
          }
        }
        break;
      }
      case Op::kAdd: {
        Node& an = nodes_[n.inputs[0]];
        Node& bn = nodes_[n.inputs[1]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          an.adjoint[i] += g[i];
          bn.adjoint[i] += g[i];
        }
        break;
      }
      case Op::kScale: {
        Node& an = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) an.adjoint[i] += n.c0 * g[i];
        break;
      }
      case Op::kScaleElem: {
        Node& an = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          an.adjoint[i] += n.elem_scale[i] * g[i];
        }
        break;
      }
      case Op::kSigmoid: {
        Node& an = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = n.value[i];
          an.adjoint[i] += y * (1.0 - y) * g[i];
        }
        break;
      }
      case Op::kLog: {
        Node& an = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          an.adjoint[i] += g[i] / an.value[i];
        }
        break;
      }
      case Op::kMean: {
        Node& an = nodes_[n.inputs[0]];
        const double gi = g[0] / static_cast<double>(an.value.size());
        for (double& ga : an.adjoint.vec()) ga += gi;
        break;
      }
      case Op::kSqDiff: {
        Node& an = nodes_[n.inputs[0]];
        Node& bn = nodes_[n.inputs[1]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double d = 2.0 * (an.value[i] - bn.value[i]) * g[i];
          an.adjoint[i] += d;
          bn.adjoint[i] -= d;
        }
        break;
      }
      case Op::kClamp: {
        Node& an = nodes_[n.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (an.value[i] > n.c0 && an.value[i] < n.c1) an.adjoint[i] += g[i];
        }
        break;
      }
    }
  }
}

}  // namespace semwt
