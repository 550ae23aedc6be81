#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scout/error.hpp"

namespace scout {

// Dense row-major matrix of doubles. Rank-1 data is stored as (n, 1) or
// (1, n); scalars as (1, 1). All model numerics run in double precision.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    require(static_cast<size_t>(rows) * cols == data.size(), ErrorCode::ShapeMismatch,
            "tensor init: " + std::to_string(rows) + "x" + std::to_string(cols) +
                " vs " + std::to_string(data.size()) + " values");
  }

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }
  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(1, n, std::move(values));
  }
  static Tensor column(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(n, 1, std::move(values));
  }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const {
    return "(" + std::to_string(rows) + ", " + std::to_string(cols) + ")";
  }

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  require(a.same_shape(b), ErrorCode::ShapeMismatch,
          std::string(where) + ": " + a.shape_str() + " vs " + b.shape_str());
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace scout
