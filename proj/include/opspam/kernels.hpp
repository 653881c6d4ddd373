#pragma once

#include <cstddef>
#include <cstdint>

// Arithmetic inner loops shared by the SVM solver and feature normalization.
// A scalar reference implementation always exists; wider variants (AVX2) are
// selected once at process start based on what the CPU supports. The active
// table can be forced with OPSPAM_KERNELS=scalar|avx2 (used by the
// equivalence tests).
namespace opspam::kernels {

struct Ops {
    const char* name;
    // sum_i x[i]*y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a*x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // sum_i x[i]^2
    double (*l2_norm_sq)(const double* x, std::size_t n);
    // x[i] *= a
    void (*scale)(double* x, std::size_t n, double a);
    // sum_k val[k] * w[idx[k]]; indices need not be sorted
    double (*sparse_dot)(const std::uint32_t* idx, const double* val,
                         std::size_t nnz, const double* w);
    // w[idx[k]] += a*val[k]; indices must be distinct
    void (*sparse_axpy)(double a, const std::uint32_t* idx, const double* val,
                        std::size_t nnz, double* w);
};

const Ops& scalar();

// nullptr when the binary was built without the AVX2 unit or the CPU lacks
// AVX2+FMA.
const Ops* avx2();

const Ops& active();

}  // namespace opspam::kernels
