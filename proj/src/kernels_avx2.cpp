#include "opspam/kernels.hpp"

#include <immintrin.h>

// AVX2/FMA variants of the arithmetic kernels. Compiled with -mavx2 -mfma in
// this translation unit only; callers reach them through the dispatch table,
// never directly, so the rest of the library stays baseline-ISA.
namespace opspam::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double l2_norm_sq_avx2(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d v0 = _mm256_loadu_pd(x + i);
        __m256d v1 = _mm256_loadu_pd(x + i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void scale_avx2(double* x, std::size_t n, double a) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (; i < n; ++i) x[i] *= a;
}

double sparse_dot_avx2(const std::uint32_t* idx, const double* val,
                       std::size_t nnz, const double* w) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= nnz; k += 4) {
        __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
        __m256d gathered = _mm256_i32gather_pd(w, vi, 8);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + k), gathered, acc);
    }
    double s = hsum(acc);
    for (; k < nnz; ++k) s += val[k] * w[idx[k]];
    return s;
}

// Scattered writes have no AVX2 primitive; the scalar loop is already
// store-bound, so the wide table reuses it.
void sparse_axpy_bywide(double a, const std::uint32_t* idx, const double* val,
                        std::size_t nnz, double* w) {
    for (std::size_t k = 0; k < nnz; ++k) w[idx[k]] += a * val[k];
}

constexpr Ops kAvx2 = {
    "avx2",       dot_avx2,        axpy_avx2, l2_norm_sq_avx2,
    scale_avx2,   sparse_dot_avx2, sparse_axpy_bywide,
};

}  // namespace

const Ops* avx2() {
    static const Ops* table = [] {
        __builtin_cpu_init();
        bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
        return ok ? &kAvx2 : nullptr;
    }();
    return table;
}

}  // namespace opspam::kernels
