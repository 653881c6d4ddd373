#include "opspam/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace opspam::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double l2_norm_sq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void scale_scalar(double* x, std::size_t n, double a) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sparse_dot_scalar(const std::uint32_t* idx, const double* val,
                         std::size_t nnz, const double* w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nnz; ++k) acc += val[k] * w[idx[k]];
    return acc;
}

void sparse_axpy_scalar(double a, const std::uint32_t* idx, const double* val,
                        std::size_t nnz, double* w) {
    for (std::size_t k = 0; k < nnz; ++k) w[idx[k]] += a * val[k];
}

constexpr Ops kScalar = {
    "scalar",        dot_scalar,        axpy_scalar, l2_norm_sq_scalar,
    scale_scalar,    sparse_dot_scalar, sparse_axpy_scalar,
};

const Ops* pick_active() {
    const char* forced = std::getenv("OPSPAM_KERNELS");
    if (forced != nullptr) {
        if (std::strcmp(forced, "scalar") == 0) return &kScalar;
        if (std::strcmp(forced, "avx2") == 0 && avx2() != nullptr) return avx2();
        return &kScalar;
    }
    if (const Ops* wide = avx2()) return wide;
    return &kScalar;
}

}  // namespace

const Ops& scalar() { return kScalar; }

#ifndef OPSPAM_HAVE_AVX2_TU
const Ops* avx2() { return nullptr; }
#endif

const Ops& active() {
    static const Ops* chosen = pick_active();
    return *chosen;
}

}  // namespace opspam::kernels
