#include <doctest.h>

#include <tuple>
#include <vector>

#include "scout/kernels.hpp"
#include "scout/kernels_impl.hpp"
#include "scout/rng.hpp"

using namespace scout;

namespace {

std::vector<double> random_buf(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// Independent reference: the textbook i-j-k loop, accumulation per output
// element in ascending k.
std::vector<double> naive_nn(const std::vector<double>& a, const std::vector<double>& b, int n,
                             int k, int m) {
  std::vector<double> c(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      for (int p = 0; p < k; ++p)
        c[static_cast<size_t>(i) * m + j] +=
            a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * m + j];
  return c;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar matmul_nn matches the naive reference") {
  Rng rng(11);
  for (auto [n, k, m] : {std::tuple{1, 1, 1}, {3, 4, 5}, {7, 9, 2}, {8, 16, 12}}) {
    const auto a = random_buf(static_cast<size_t>(n) * k, rng);
    const auto b = random_buf(static_cast<size_t>(k) * m, rng);
    std::vector<double> c(static_cast<size_t>(n) * m, 0.0);
    kernels::scalar::matmul_nn(a.data(), b.data(), c.data(), n, k, m);
    CHECK(max_abs_diff(c, naive_nn(a, b, n, k, m)) < 1e-13);
  }
}

TEST_CASE("scalar transpose variants agree with explicit transposition") {
  Rng rng(12);
  const int n = 5, k = 7, m = 4;
  const auto a = random_buf(static_cast<size_t>(n) * k, rng);
  const auto b = random_buf(static_cast<size_t>(k) * m, rng);

  // C = A^T B with A stored (k, n): transpose A by hand, then NN.
  std::vector<double> at(static_cast<size_t>(n) * k);
  for (int p = 0; p < k; ++p)
    for (int i = 0; i < n; ++i)
      at[static_cast<size_t>(i) * k + p] = a[static_cast<size_t>(p) * n + i];
  std::vector<double> c1(static_cast<size_t>(n) * m, 0.0);
  kernels::scalar::matmul_tn(a.data(), b.data(), c1.data(), k, n, m);
  CHECK(max_abs_diff(c1, naive_nn(at, b, n, k, m)) < 1e-13);

  // C = A B^T with B stored (m, k).
  const auto a2 = random_buf(static_cast<size_t>(n) * k, rng);
  const auto b2 = random_buf(static_cast<size_t>(m) * k, rng);
  std::vector<double> bt(static_cast<size_t>(k) * m);
  for (int j = 0; j < m; ++j)
    for (int p = 0; p < k; ++p)
      bt[static_cast<size_t>(p) * m + j] = b2[static_cast<size_t>(j) * k + p];
  std::vector<double> c2(static_cast<size_t>(n) * m, 0.0);
  kernels::scalar::matmul_nt(a2.data(), b2.data(), c2.data(), n, k, m);
  CHECK(max_abs_diff(c2, naive_nn(a2, bt, n, k, m)) < 1e-13);
}

#ifdef SCOUT_HAVE_AVX2
TEST_CASE("avx2 variants are equivalent to the scalar reference") {
  if (!kernels::cpu_supports_avx2()) return;
  Rng rng(13);

  SUBCASE("order-preserving kernels are bit-identical") {
    for (auto [n, k, m] : {std::tuple{2, 3, 4}, {5, 8, 7}, {9, 16, 13}, {4, 4, 1}}) {
      const auto a = random_buf(static_cast<size_t>(n) * k, rng);
      const auto b = random_buf(static_cast<size_t>(k) * m, rng);
      std::vector<double> cs(static_cast<size_t>(n) * m, 0.0), cv = cs;
      kernels::scalar::matmul_nn(a.data(), b.data(), cs.data(), n, k, m);
      kernels::avx2::matmul_nn(a.data(), b.data(), cv.data(), n, k, m);
      CHECK(cs == cv);

      std::vector<double> ts(static_cast<size_t>(k) * m, 0.0), tv = ts;
      kernels::scalar::matmul_tn(a.data(), b.data(), ts.data(), n, k, m);
      kernels::avx2::matmul_tn(a.data(), b.data(), tv.data(), n, k, m);
      CHECK(ts == tv);
    }

    const auto x = random_buf(1001, rng);
    const auto y = random_buf(1001, rng);
    std::vector<double> os(1001), ov(1001);
    kernels::scalar::add(x.data(), y.data(), os.data(), x.size());
    kernels::avx2::add(x.data(), y.data(), ov.data(), x.size());
    CHECK(os == ov);
    kernels::scalar::mul(x.data(), y.data(), os.data(), x.size());
    kernels::avx2::mul(x.data(), y.data(), ov.data(), x.size());
    CHECK(os == ov);
    kernels::scalar::leaky_relu_fwd(x.data(), 0.2, os.data(), x.size());
    kernels::avx2::leaky_relu_fwd(x.data(), 0.2, ov.data(), x.size());
    CHECK(os == ov);
    kernels::scalar::scale(x.data(), 1.7, os.data(), x.size());
    kernels::avx2::scale(x.data(), 1.7, ov.data(), x.size());
    CHECK(os == ov);

    std::vector<double> ds(1001, 0.0), dv(1001, 0.0);
    kernels::scalar::leaky_relu_bwd(x.data(), y.data(), 0.2, ds.data(), x.size());
    kernels::avx2::leaky_relu_bwd(x.data(), y.data(), 0.2, dv.data(), x.size());
    CHECK(ds == dv);
    kernels::scalar::axpy(0.3, x.data(), ds.data(), x.size());
    kernels::avx2::axpy(0.3, x.data(), dv.data(), x.size());
    CHECK(ds == dv);
  }

  SUBCASE("k-reduction kernel matches within rounding") {
    for (auto [n, k, m] : {std::tuple{3, 5, 4}, {6, 64, 9}, {2, 129, 3}}) {
      const auto a = random_buf(static_cast<size_t>(n) * k, rng);
      const auto b = random_buf(static_cast<size_t>(m) * k, rng);
      std::vector<double> cs(static_cast<size_t>(n) * m, 0.0), cv = cs;
      kernels::scalar::matmul_nt(a.data(), b.data(), cs.data(), n, k, m);
      kernels::avx2::matmul_nt(a.data(), b.data(), cv.data(), n, k, m);
      CHECK(max_abs_diff(cs, cv) < 1e-12);
    }
  }

  SUBCASE("sigmoid backward is bit-identical") {
    auto y = random_buf(517, rng);
    for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
    const auto dy = random_buf(517, rng);
    std::vector<double> ds(517, 0.0), dv(517, 0.0);
    kernels::scalar::sigmoid_bwd(y.data(), dy.data(), ds.data(), y.size());
    kernels::avx2::sigmoid_bwd(y.data(), dy.data(), dv.data(), y.size());
    CHECK(ds == dv);
  }
}
#endif

TEST_CASE("runtime dispatch can be forced to either backend") {
  const kernels::Backend original = kernels::active_backend();
  kernels::force_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  if (kernels::cpu_supports_avx2()) {
    kernels::force_backend(kernels::Backend::Avx2);
    CHECK(kernels::active_backend() == kernels::Backend::Avx2);
  }
  kernels::force_backend(original);
}

}  // TEST_SUITE
