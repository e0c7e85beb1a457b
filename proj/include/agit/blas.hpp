#pragma once

#include <cstdint>
#include <string>

namespace agit {

// C = alpha * op(A) * op(B) + beta * C, row-major.
// op(A) is A when trans_a is false, A^T otherwise; likewise for B.
// A is (m, k) after op, B is (k, n) after op, C is (m, n).
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, float alpha, const float* a,
          std::int64_t lda, const float* b, std::int64_t ldb, float beta, float* c, std::int64_t ldc);

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, double alpha, const double* a,
          std::int64_t lda, const double* b, std::int64_t ldb, double beta, double* c, std::int64_t ldc);

// Reports which backend handles gemm ("openblas" or "builtin") for logs.
std::string gemm_backend();

}  // namespace agit
