#include "scout/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "scout/error.hpp"
#include "scout/kernels_impl.hpp"

namespace scout::kernels {

bool cpu_supports_avx2() {
#if defined(SCOUT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

enum class Choice { Unset, Scalar, Avx2 };
std::atomic<Choice> g_choice{Choice::Unset};

Backend resolve() {
  Choice c = g_choice.load(std::memory_order_acquire);
  if (c == Choice::Unset) {
    Backend picked = Backend::Scalar;
    if (cpu_supports_avx2() && std::getenv("SCOUT_FORCE_SCALAR") == nullptr)
      picked = Backend::Avx2;
    g_choice.store(picked == Backend::Avx2 ? Choice::Avx2 : Choice::Scalar,
                   std::memory_order_release);
    return picked;
  }
  return c == Choice::Avx2 ? Backend::Avx2 : Backend::Scalar;
}

}  // namespace

Backend active_backend() { return resolve(); }

std::string backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
  require(b != Backend::Avx2 || cpu_supports_avx2(), ErrorCode::InvalidConfig,
          "AVX2 backend requested but the CPU does not support it");
  g_choice.store(b == Backend::Avx2 ? Choice::Avx2 : Choice::Scalar, std::memory_order_release);
}

void reset_backend() { g_choice.store(Choice::Unset, std::memory_order_release); }

#ifdef SCOUT_HAVE_AVX2
#define SCOUT_DISPATCH(fn, ...)                  \
  do {                                           \
    if (resolve() == Backend::Avx2)              \
      return avx2::fn(__VA_ARGS__);              \
    return scalar::fn(__VA_ARGS__);              \
  } while (0)
#else
#define SCOUT_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m) {
  SCOUT_DISPATCH(matmul_nn, a, b, c, n, k, m);
}
void matmul_tn(const double* a, const double* b, double* c, int k, int n, int m) {
  SCOUT_DISPATCH(matmul_tn, a, b, c, k, n, m);
}
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m) {
  SCOUT_DISPATCH(matmul_nt, a, b, c, n, k, m);
}
void axpy(double alpha, const double* x, double* y, size_t n) {
  SCOUT_DISPATCH(axpy, alpha, x, y, n);
}
void scale(const double* x, double alpha, double* out, size_t n) {
  SCOUT_DISPATCH(scale, x, alpha, out, n);
}
void add(const double* a, const double* b, double* out, size_t n) {
  SCOUT_DISPATCH(add, a, b, out, n);
}
void mul(const double* a, const double* b, double* out, size_t n) {
  SCOUT_DISPATCH(mul, a, b, out, n);
}
void leaky_relu_fwd(const double* x, double slope, double* out, size_t n) {
  SCOUT_DISPATCH(leaky_relu_fwd, x, slope, out, n);
}
void leaky_relu_bwd(const double* x, const double* dy, double slope, double* dx, size_t n) {
  SCOUT_DISPATCH(leaky_relu_bwd, x, dy, slope, dx, n);
}
void sigmoid_fwd(const double* x, double* out, size_t n) {
  SCOUT_DISPATCH(sigmoid_fwd, x, out, n);
}
void sigmoid_bwd(const double* y, const double* dy, double* dx, size_t n) {
  SCOUT_DISPATCH(sigmoid_bwd, y, dy, dx, n);
}

#undef SCOUT_DISPATCH

}  // namespace scout::kernels
