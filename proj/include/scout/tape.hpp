#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "scout/rng.hpp"
#include "scout/tensor.hpp"

namespace scout {

using VarId = int;

// Reverse-mode tape. One tape records one forward pass; backward() may run
// once and fills the gradient of every recorded variable with respect to a
// scalar root. Gradients accumulate additively, so a value feeding several
// downstream terms receives the sum of their contributions.
//
// The tape owns all intermediate values. Callers keep VarIds (stable
// indices) and read values/gradients back through them.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  VarId leaf(Tensor value);

  const Tensor& value(VarId id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(VarId id) const { return nodes_[static_cast<size_t>(id)].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // ---- arithmetic ----
  VarId matmul(VarId a, VarId b);
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId mul(VarId a, VarId b);  // elementwise
  VarId div(VarId a, VarId b);  // elementwise
  VarId scale(VarId a, double c);
  VarId add_const(VarId a, const Tensor& t);     // t is not differentiated
  VarId add_rowvec(VarId a, VarId b);            // (n,d) + (1,d)
  VarId sqrt_elem(VarId a);

  // ---- activations ----
  VarId relu(VarId a);
  VarId leaky_relu(VarId a, double slope);
  VarId sigmoid(VarId a);

  // ---- softmax ----
  // Row softmax over unmasked entries; masked outputs are exactly 0.
  // mask is row-major (rows*cols), nonzero = participates.
  VarId softmax_rows(VarId scores, const std::vector<uint8_t>& mask);
  // Softmax over groups of rows of a column vector (E,1). segment[e] gives
  // the group of row e; every group in [0, n_segments) must be nonempty.
  VarId segment_softmax(VarId scores, const std::vector<int>& segment, int n_segments);

  // ---- structure ----
  VarId gather_rows(VarId a, std::vector<int> idx);
  VarId scatter_add_rows(VarId a, std::vector<int> idx, int n_rows);
  VarId concat_cols(const std::vector<VarId>& parts);
  VarId slice_cols(VarId a, int c0, int c1);
  VarId row_scale(VarId a, VarId s);  // (n,d) * (n,1), broadcast over columns

  // Inverted dropout: zeros entries with probability p and scales survivors
  // by 1/(1-p) in training mode; identity (no node recorded) in eval mode.
  VarId dropout(VarId a, double p, bool training, Rng* rng);

  // Prefix sums over time for (n, T*2) laid out [t0x,t0y,t1x,t1y,...].
  // Turns per-step velocities into cumulative displacements.
  VarId cumsum_timepairs(VarId a, int t_steps);

  // ---- reductions / losses ----
  VarId sum_all(VarId a);  // -> (1,1)
  // Elementwise Huber value of (pred - target); target is constant.
  VarId huber(VarId pred, Tensor target, double delta);

  void backward(VarId root);
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
  };

  Tensor& grad_mut(VarId id) { return nodes_[static_cast<size_t>(id)].grad; }
  VarId push(Tensor value, std::function<void()> backprop);

  // Deque keeps node references stable while new operations are recorded.
  std::deque<Node> nodes_;
  std::vector<std::function<void()>> backprop_;
  bool backward_done_ = false;
};

}  // namespace scout
