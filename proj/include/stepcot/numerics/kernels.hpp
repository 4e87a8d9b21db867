// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense f64 inner-loop kernels. Every kernel has a scalar reference version;
// SIMD versions (AVX2+FMA on x86-64, NEON on aarch64) are picked at runtime
// and are checked against the scalar path by the kernel equivalence tests.
//
// All matrices are row-major and contiguous. The gemm variants accumulate
// into C (C += op(A) * op(B)); callers zero C first when they want a plain
// product.

#include <cstddef>
#include <span>
#include <string_view>

namespace stepcot::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend b);

/// Backends compiled into this binary and supported by the running CPU.
bool backend_available(Backend b);

/// Backend used by the dispatching entry points below. Chosen once at
/// startup (best available, or STEPCOT_KERNELS=scalar|avx2|neon).
Backend active_backend();

/// Overrides the active backend; throws std::invalid_argument when the
/// requested backend is unavailable.
void set_backend(Backend b);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
};

/// Kernel table of a specific backend (for equivalence testing).
const KernelTable& table(Backend b);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n);

namespace scalar {
const KernelTable& table();
}
#if defined(STEPCOT_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(STEPCOT_HAVE_NEON)
namespace neon {
const KernelTable& table();
}
#endif

}  // namespace stepcot::kernels
