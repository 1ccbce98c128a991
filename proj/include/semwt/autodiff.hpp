// Reverse-mode automatic differentiation over a small closed op set:
// affine, add, scale (scalar or constant elementwise), sigmoid, natural log,
// arithmetic mean, element-wise squared difference, and an interval clamp
// used to keep discriminator outputs away from {0, 1}.
//
// A Tape owns the whole graph. Nodes are created in topological order and
// backward() walks them once in reverse, seeding the scalar root with
// adjoint 1.
#ifndef SEMWT_AUTODIFF_HPP
#define SEMWT_AUTODIFF_HPP

#include <cstddef>
#include <vector>

#include "semwt/tensor.hpp"

namespace semwt {

class Tape {
 public:
  using Id = std::size_t;

  // Leaf node. Gradients w.r.t. leaves are available after backward().
  Id input(Tensor value);

  // y[i] = sum_j W[i][j] x[j] + b[i].  x may be [n_in] or batched [B, n_in],
  // in which case the result is [B, n_out] and W/b gradients sum over the
  // batch.
  Id affine(Id x, Id w, Id b);

  Id add(Id a, Id b);               // same shape
  Id scale(Id a, double c);         // uniform scalar scale
  Id scale(Id a, Tensor c);         // constant elementwise scale, same shape
  Id sigmoid(Id a);
  Id log(Id a);
  Id mean(Id a);                    // scalar
  Id sqdiff(Id a, Id b);            // (a - b)^2 elementwise
  Id clamp(Id a, double lo, double hi);  // pass-through gradient inside

  const Tensor& value(Id id) const { return nodes_[id].value; }
  const Tensor& grad(Id id) const { return nodes_[id].adjoint; }

  // root must be a scalar (single-element) node.
  void backward(Id root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    kInput,
    kAffine,
    kAdd,
    kScale,
    kScaleElem,
    kSigmoid,
    kLog,
    kMean,
    kSqDiff,
    kClamp,
  };

  struct Node {
    Op op;
    std::vector<Id> inputs;
    Tensor value;
    Tensor adjoint;
    // Op payloads.
    double c0 = 0.0;
    double c1 = 0.0;
    Tensor elem_scale;
  };

  Id push(Node node);
  Node& node(Id id) { return nodes_[id]; }

  std::vector<Node> nodes_;
};

}  // namespace semwt

#endif  // SEMWT_AUTODIFF_HPP
