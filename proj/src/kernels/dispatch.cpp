#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "wm/common.hpp"
#include "wm/kernels.hpp"

namespace wm::kernels {

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void scal(double, double*, std::size_t);
void elem_mul(const double*, const double*, double*, std::size_t);
void matvec(const double*, const double*, double*, std::size_t, std::size_t);
}  // namespace avx2
#endif
#if defined(__aarch64__)
namespace neon {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void scal(double, double*, std::size_t);
void elem_mul(const double*, const double*, double*, std::size_t);
void matvec(const double*, const double*, double*, std::size_t, std::size_t);
}  // namespace neon
#endif

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend best_backend() {
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

static Backend initial_backend() {
  if (const char* env = std::getenv("WM_KERNEL_BACKEND")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && backend_available(Backend::avx2)) return Backend::avx2;
    if (std::strcmp(env, "neon") == 0 && backend_available(Backend::neon)) return Backend::neon;
  }
  return best_backend();
}

static std::atomic<Backend> g_backend{initial_backend()};

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw ConfigError(std::string("kernel backend not available: ") + backend_name(b));
  }
  g_backend.store(b, std::memory_order_relaxed);
}

double dot(const double* a, const double* b, std::size_t n) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: return avx2::dot(a, b, n);
#endif
#if defined(__aarch64__)
    case Backend::neon: return neon::dot(a, b, n);
#endif
    default: return scalar::dot(a, b, n);
  }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: avx2::axpy(a, x, y, n); return;
#endif
#if defined(__aarch64__)
    case Backend::neon: neon::axpy(a, x, y, n); return;
#endif
    default: scalar::axpy(a, x, y, n);
  }
}

void scal(double a, double* x, std::size_t n) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: avx2::scal(a, x, n); return;
#endif
#if defined(__aarch64__)
    case Backend::neon: neon::scal(a, x, n); return;
#endif
    default: scalar::scal(a, x, n);
  }
}

void elem_mul(const double* a, const double* b, double* out, std::size_t n) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: avx2::elem_mul(a, b, out, n); return;
#endif
#if defined(__aarch64__)
    case Backend::neon: neon::elem_mul(a, b, out, n); return;
#endif
    default: scalar::elem_mul(a, b, out, n);
  }
}

void matvec(const double* m, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: avx2::matvec(m, x, y, rows, cols); return;
#endif
#if defined(__aarch64__)
    case Backend::neon: neon::matvec(m, x, y, rows, cols); return;
#endif
    default: scalar::matvec(m, x, y, rows, cols);
  }
}

}  // namespace wm::kernels
