// Scalar reference kernels. These define the numeric semantics that the
// SIMD variants must reproduce.

#include "scout/kernels_impl.hpp"

namespace scout::kernels::scalar {

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int k, int n, int m) {
  for (int p = 0; p < k; ++p) {
    const double* arow = a + static_cast<size_t>(p) * n;
    const double* brow = b + static_cast<size_t>(p) * m;
    for (int i = 0; i < n; ++i) {
      const double api = arow[i];
      double* crow = c + static_cast<size_t>(i) * m;
      for (int j = 0; j < m; ++j) crow[j] += api * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

void axpy(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* x, double alpha, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = x[i] * alpha;
}

void add(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void leaky_relu_fwd(const double* x, double slope, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_bwd(const double* x, const double* dy, double slope, double* dx, size_t n) {
  for (size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : slope * dy[i];
}

void sigmoid_fwd(const double* x, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_bwd(const double* y, const double* dy, double* dx, size_t n) {
  for (size_t i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

}  // namespace scout::kernels::scalar
