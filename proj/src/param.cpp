#include "scout/param.hpp"

#include <cmath>

#include "scout/error.hpp"

namespace scout {

Param& ParamStore::add(const std::string& name, Tensor value) {
  require(index_.count(name) == 0, ErrorCode::InvalidConfig, "duplicate param: " + name);
  index_[name] = params_.size();
  Tensor grad = Tensor::zeros(value.rows, value.cols);
  params_.push_back(Param{name, std::move(value), std::move(grad)});
  return params_.back();
}

Param& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::InvalidConfig, "unknown param: " + name);
  return params_[it->second];
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::InvalidConfig, "unknown param: " + name);
  return params_[it->second];
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const Param& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (Param& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

bool ParamStore::grads_finite(std::string* offending) const {
  for (const Param& p : params_) {
    if (!p.grad.all_finite()) {
      if (offending) *offending = p.name;
      return false;
    }
  }
  return true;
}

Tensor kaiming_init(int rows, int cols, int fan_in, Rng& rng) {
  require(fan_in >= 1, ErrorCode::InvalidConfig, "kaiming_init: fan_in must be >= 1");
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (double& v : t.data) v = rng.normal(0.0, stddev);
  return t;
}

double gradient_rel_error(const Tensor& analytic, const Tensor& reference, double floor) {
  require_same_shape(analytic, reference, "gradient_rel_error");
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data[i];
    const double b = reference.data[i];
    const double denom = std::max(std::fabs(a) + std::fabs(b), floor);
    worst = std::max(worst, std::fabs(a - b) / denom);
  }
  return worst;
}

}  // namespace scout
