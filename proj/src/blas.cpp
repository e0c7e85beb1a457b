#include "agit/blas.hpp"

#include <dlfcn.h>
#include <stdlib.h>

namespace agit {
namespace {

// Row-major CBLAS constants.
constexpr int kCblasRowMajor = 101;
constexpr int kCblasNoTrans = 111;
constexpr int kCblasTrans = 112;

using SgemmFn = void (*)(int order, int trans_a, int trans_b, int m, int n, int k, float alpha, const float* a,
                         int lda, const float* b, int ldb, float beta, float* c, int ldc);
using DgemmFn = void (*)(int order, int trans_a, int trans_b, int m, int n, int k, double alpha, const double* a,
                         int lda, const double* b, int ldb, double beta, double* c, int ldc);

struct Backend {
  SgemmFn sgemm = nullptr;
  DgemmFn dgemm = nullptr;
};

// OpenBLAS picks its kernel set from OPENBLAS_CORETYPE inside a load-time
// constructor, and its runtime detection can fall back to a generic kernel
// on newer CPUs. Loading lazily via dlopen lets us set the variable first;
// overwrite=0 keeps any value the user exported.
Backend load_backend() {
  Backend b;
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512bw") &&
      __builtin_cpu_supports("avx512vl") && __builtin_cpu_supports("avx512dq")) {
    setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
  } else if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
  }
#endif
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  void* h = dlopen("libopenblas.so.0", RTLD_NOW | RTLD_LOCAL);
  if (!h) h = dlopen("libopenblas.so", RTLD_NOW | RTLD_LOCAL);
  if (h) {
    b.sgemm = reinterpret_cast<SgemmFn>(dlsym(h, "cblas_sgemm"));
    b.dgemm = reinterpret_cast<DgemmFn>(dlsym(h, "cblas_dgemm"));
    if (!b.sgemm || !b.dgemm) {
      b.sgemm = nullptr;
      b.dgemm = nullptr;
    }
  }
  return b;
}

const Backend& backend() {
  static const Backend b = load_backend();
  return b;
}

// Blocked fallback used when no BLAS library can be loaded.
template <typename T>
void naive_gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, T alpha, const T* a,
                std::int64_t lda, const T* b, std::int64_t ldb, T beta, T* c, std::int64_t ldc) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      c[i * ldc + j] *= beta;
    }
  }
  constexpr std::int64_t kBlock = 64;
  for (std::int64_t i0 = 0; i0 < m; i0 += kBlock) {
    const std::int64_t i1 = std::min(i0 + kBlock, m);
    for (std::int64_t p0 = 0; p0 < k; p0 += kBlock) {
      const std::int64_t p1 = std::min(p0 + kBlock, k);
      for (std::int64_t i = i0; i < i1; ++i) {
        for (std::int64_t p = p0; p < p1; ++p) {
          const T av = alpha * (trans_a ? a[p * lda + i] : a[i * lda + p]);
          if (av == T(0)) continue;
          const T* brow = trans_b ? nullptr : b + p * ldb;
          T* crow = c + i * ldc;
          if (trans_b) {
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * b[j * ldb + p];
          } else {
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
          }
        }
      }
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, float alpha, const float* a,
          std::int64_t lda, const float* b, std::int64_t ldb, float beta, float* c, std::int64_t ldc) {
  if (m <= 0 || n <= 0) return;
  if (const auto& bk = backend(); bk.sgemm) {
    bk.sgemm(kCblasRowMajor, trans_a ? kCblasTrans : kCblasNoTrans, trans_b ? kCblasTrans : kCblasNoTrans,
             static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a, static_cast<int>(lda), b,
             static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
    return;
  }
  naive_gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, double alpha, const double* a,
          std::int64_t lda, const double* b, std::int64_t ldb, double beta, double* c, std::int64_t ldc) {
  if (m <= 0 || n <= 0) return;
  if (const auto& bk = backend(); bk.dgemm) {
    bk.dgemm(kCblasRowMajor, trans_a ? kCblasTrans : kCblasNoTrans, trans_b ? kCblasTrans : kCblasNoTrans,
             static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a, static_cast<int>(lda), b,
             static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
    return;
  }
  naive_gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

std::string gemm_backend() { return backend().sgemm ? "openblas" : "builtin"; }

}  // namespace agit
