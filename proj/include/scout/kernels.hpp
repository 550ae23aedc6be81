#pragma once

#include <cstddef>
#include <string>

namespace scout::kernels {

// Dense inner-loop kernels behind the tape operations. Scalar reference
// implementations define the semantics; the AVX2 variants are selected at
// runtime when the CPU supports them and are equivalence-tested against the
// scalar versions.
//
// matmul_nn and matmul_tn vectorize across output columns and keep the
// scalar accumulation order, so they are bit-identical to the reference
// (the core library is built with -ffp-contract=off). matmul_nt reduces
// along k with vector accumulators, so it may differ in the last ulps.
//
// All matmul kernels accumulate (C += ...); backward passes rely on this.

// C (n,m) += A (n,k) * B (k,m)
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m);
// C (n,m) += A^T B with A stored (k,n), B (k,m)
void matmul_tn(const double* a, const double* b, double* c, int k, int n, int m);
// C (n,m) += A B^T with A (n,k), B stored (m,k)
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, size_t n);
// out = x * alpha
void scale(const double* x, double alpha, double* out, size_t n);
// out = a + b / out = a * b
void add(const double* a, const double* b, double* out, size_t n);
void mul(const double* a, const double* b, double* out, size_t n);

// Activations. Forward writes out; backward accumulates into dx.
void leaky_relu_fwd(const double* x, double slope, double* out, size_t n);
void leaky_relu_bwd(const double* x, const double* dy, double slope, double* dx, size_t n);
void sigmoid_fwd(const double* x, double* out, size_t n);
// y is the forward output: dx += dy * y * (1 - y)
void sigmoid_bwd(const double* y, const double* dy, double* dx, size_t n);

enum class Backend { Scalar, Avx2 };

Backend active_backend();
std::string backend_name(Backend b);
bool cpu_supports_avx2();
// Testing hook; selecting Avx2 on a CPU without it throws.
void force_backend(Backend b);
void reset_backend();

}  // namespace scout::kernels
