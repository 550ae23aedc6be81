// AVX2 kernel variants (4 doubles per lane). This TU is only compiled when
// SCOUT_ENABLE_AVX2 is on; the dispatcher checks CPU support at runtime.
//
// matmul_nn / matmul_tn broadcast the left operand and stream across output
// columns, which keeps per-element accumulation order identical to the
// scalar reference. Multiplies and adds stay separate (no FMA) for the same
// reason. matmul_nt reduces along k in four lanes and is only near-exact.

#include "scout/kernels_impl.hpp"

#ifdef SCOUT_HAVE_AVX2

#include <immintrin.h>

namespace scout::kernels::avx2 {

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const __m256d aip = _mm256_set1_pd(arow[p]);
      const double* brow = b + static_cast<size_t>(p) * m;
      int j = 0;
      for (; j + 4 <= m; j += 4) {
        const __m256d prod = _mm256_mul_pd(aip, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
      }
      for (; j < m; ++j) crow[j] += arow[p] * brow[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int k, int n, int m) {
  for (int p = 0; p < k; ++p) {
    const double* arow = a + static_cast<size_t>(p) * n;
    const double* brow = b + static_cast<size_t>(p) * m;
    for (int i = 0; i < n; ++i) {
      const __m256d api = _mm256_set1_pd(arow[i]);
      double* crow = c + static_cast<size_t>(i) * m;
      int j = 0;
      for (; j + 4 <= m; j += 4) {
        const __m256d prod = _mm256_mul_pd(api, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
      }
      for (; j < m; ++j) crow[j] += arow[i] * brow[j];
    }
  }
}

static inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      __m256d acc = _mm256_setzero_pd();
      int p = 0;
      for (; p + 4 <= k; p += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(arow + p), _mm256_loadu_pd(brow + p)));
      double sum = hsum(acc);
      for (; p < k; ++p) sum += arow[p] * brow[p];
      crow[j] += sum;
    }
  }
}

void axpy(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(const double* x, double alpha, double* out, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
  for (; i < n; ++i) out[i] = x[i] * alpha;
}

void add(const double* a, const double* b, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void leaky_relu_fwd(const double* x, double slope, double* out, size_t n) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d neg = _mm256_mul_pd(v, vs);
    const __m256d pos_mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(neg, v, pos_mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_bwd(const double* x, const double* dy, double slope, double* dx, size_t n) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d g = _mm256_loadu_pd(dy + i);
    const __m256d pos_mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    const __m256d slope_g = _mm256_mul_pd(g, vs);
    const __m256d contrib = _mm256_blendv_pd(slope_g, g, pos_mask);
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), contrib));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : slope * dy[i];
}

// exp stays scalar; a vector polynomial would not be bit-equal to the
// reference and the sigmoid is never the hot loop here.
void sigmoid_fwd(const double* x, double* out, size_t n) {
  scalar::sigmoid_fwd(x, out, n);
}

void sigmoid_bwd(const double* y, const double* dy, double* dx, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d g = _mm256_loadu_pd(dy + i);
    const __m256d contrib = _mm256_mul_pd(_mm256_mul_pd(g, vy), _mm256_sub_pd(one, vy));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), contrib));
  }
  for (; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

}  // namespace scout::kernels::avx2

#endif  // SCOUT_HAVE_AVX2
