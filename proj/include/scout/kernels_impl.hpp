#pragma once

// Internal: per-backend kernel entry points used by the dispatcher and the
// equivalence tests. Application code goes through scout/kernels.hpp.

#include <cmath>
#include <cstddef>

namespace scout::kernels::scalar {
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_tn(const double* a, const double* b, double* c, int k, int n, int m);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m);
void axpy(double alpha, const double* x, double* y, size_t n);
void scale(const double* x, double alpha, double* out, size_t n);
void add(const double* a, const double* b, double* out, size_t n);
void mul(const double* a, const double* b, double* out, size_t n);
void leaky_relu_fwd(const double* x, double slope, double* out, size_t n);
void leaky_relu_bwd(const double* x, const double* dy, double slope, double* dx, size_t n);
void sigmoid_fwd(const double* x, double* out, size_t n);
void sigmoid_bwd(const double* y, const double* dy, double* dx, size_t n);
}  // namespace scout::kernels::scalar

#ifdef SCOUT_HAVE_AVX2
namespace scout::kernels::avx2 {
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_tn(const double* a, const double* b, double* c, int k, int n, int m);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m);
void axpy(double alpha, const double* x, double* y, size_t n);
void scale(const double* x, double alpha, double* out, size_t n);
void add(const double* a, const double* b, double* out, size_t n);
void mul(const double* a, const double* b, double* out, size_t n);
void leaky_relu_fwd(const double* x, double slope, double* out, size_t n);
void leaky_relu_bwd(const double* x, const double* dy, double slope, double* dx, size_t n);
void sigmoid_fwd(const double* x, double* out, size_t n);
void sigmoid_bwd(const double* y, const double* dy, double* dx, size_t n);
}  // namespace scout::kernels::avx2
#endif
