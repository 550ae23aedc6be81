#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "scout/rng.hpp"
#include "scout/tape.hpp"
#include "scout/tensor.hpp"

namespace scout {

// One learnable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered collection of named parameters. Iteration follows insertion order,
// which keeps optimizer updates and checkpoints deterministic.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor value);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }
  size_t count() const { return params_.size(); }
  size_t scalar_count() const;

  void zero_grads();
  bool grads_finite(std::string* offending = nullptr) const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Ties tape leaves to their backing Params for one forward pass. After
// backward(), flush() adds each leaf gradient into its Param accumulator.
class ParamBinding {
 public:
  VarId bind(Tape& tape, Param& p) {
    VarId id = tape.leaf(p.value);
    bound_.emplace_back(&p, id);
    return id;
  }
  void flush(const Tape& tape) {
    for (auto& [param, id] : bound_) {
      const Tensor& g = tape.grad(id);
      for (size_t i = 0; i < g.size(); ++i) param->grad.data[i] += g.data[i];
    }
  }

 private:
  std::vector<std::pair<Param*, VarId>> bound_;
};

// Zero-mean normal with std = sqrt(2 / fan_in), deterministic given the rng
// stream.
Tensor kaiming_init(int rows, int cols, int fan_in, Rng& rng);

// Central finite differences of a scalar function with respect to every
// coordinate of `p`. The gradient oracle used by all gradient-check tests;
// it must stay independent of the tape. `f` must be deterministic.
template <typename F>
Tensor finite_diff_gradient(F&& f, Tensor& p, double eps = 1e-5) {
  Tensor g(p.rows, p.cols);
  for (size_t i = 0; i < p.data.size(); ++i) {
    const double saved = p.data[i];
    p.data[i] = saved + eps;
    const double up = f();
    p.data[i] = saved - eps;
    const double down = f();
    p.data[i] = saved;
    g.data[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

// Relative error used by the gradient checks: |a-b| / max(|a|+|b|, floor).
double gradient_rel_error(const Tensor& analytic, const Tensor& reference, double floor = 1e-4);

}  // namespace scout
