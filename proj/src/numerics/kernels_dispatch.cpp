// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "stepcot/numerics/kernels.hpp"

namespace stepcot::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(STEPCOT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend best_backend() {
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("STEPCOT_KERNELS")) {
    const std::string want(env);
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon})
      if (want == backend_name(b) && backend_available(b)) return b;
  }
  return best_backend();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> t{&table(initial_backend())};
  return t;
}

std::atomic<Backend>& active_id() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: {
      static const bool ok = cpu_has_avx2();
      return ok;
    }
    case Backend::Neon:
#if defined(STEPCOT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(b)));
  switch (b) {
#if defined(STEPCOT_HAVE_AVX2)
    case Backend::Avx2: return avx2::table();
#endif
#if defined(STEPCOT_HAVE_NEON)
    case Backend::Neon: return neon::table();
#endif
    default: return scalar::table();
  }
}

Backend active_backend() { return active_id().load(); }

void set_backend(Backend b) {
  const KernelTable& t = table(b);
  active_table().store(&t);
  active_id().store(b);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels::dot: length mismatch");
  return active_table().load()->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernels::axpy: length mismatch");
  active_table().load()->axpy(alpha, x.data(), y.data(), x.size());
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  active_table().load()->gemm_nn(a, b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  active_table().load()->gemm_nt(a, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  active_table().load()->gemm_tn(a, b, c, m, k, n);
}

}  // namespace stepcot::kernels
