// SPDX-License-Identifier: Apache-2.0
// aarch64 only; NEON is part of the base ISA there.
#include <arm_neon.h>

#include "stepcot/numerics/kernels.hpp"

namespace stepcot::kernels::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_strided_a(const double* a, std::size_t row_stride, std::size_t col_stride,
                    const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * row_stride;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      float64x2_t c0 = vld1q_f64(ci + j);
      float64x2_t c1 = vld1q_f64(ci + j + 2);
      float64x2_t c2 = vld1q_f64(ci + j + 4);
      float64x2_t c3 = vld1q_f64(ci + j + 6);
      for (std::size_t p = 0; p < k; ++p) {
        const float64x2_t av = vdupq_n_f64(ai[p * col_stride]);
        const double* bp = b + p * n + j;
        c0 = vfmaq_f64(c0, av, vld1q_f64(bp));
        c1 = vfmaq_f64(c1, av, vld1q_f64(bp + 2));
        c2 = vfmaq_f64(c2, av, vld1q_f64(bp + 4));
        c3 = vfmaq_f64(c3, av, vld1q_f64(bp + 6));
      }
      vst1q_f64(ci + j, c0);
      vst1q_f64(ci + j + 2, c1);
      vst1q_f64(ci + j + 4, c2);
      vst1q_f64(ci + j + 6, c3);
    }
    for (; j < n; ++j) {
      double acc = ci[j];
      for (std::size_t p = 0; p < k; ++p) acc += ai[p * col_stride] * b[p * n + j];
      ci[j] = acc;
    }
  }
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  gemm_strided_a(a, k, 1, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  gemm_strided_a(a, 1, m, b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{&dot, &axpy, &gemm_nn, &gemm_nt, &gemm_tn};
  return t;
}

}  // namespace stepcot::kernels::neon
