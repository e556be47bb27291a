#pragma once

#include <cmath>
#include <cstddef>

// Double-precision primitives behind the hot loops: pairwise distances for
// nearest-neighbor scoring and farthest-point selection, reductions for
// column statistics, and row updates for the Laplacian filter.
//
// kernels::scalar holds the reference implementations. Vectorized variants
// (AVX2 on x86-64, NEON on aarch64) are compiled alongside and one table is
// selected at runtime from CPU capabilities; force_impl() overrides the
// choice for equivalence tests and the CLI's --kernels flag.

namespace ismp::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);  // y += a * x
void scale(double* y, double a, std::size_t n);                  // y *= a
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define ISMP_KERNELS_HAVE_AVX2 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);
void scale(double* y, double a, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
#define ISMP_KERNELS_HAVE_NEON 1
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);
void scale(double* y, double a, std::size_t n);
}  // namespace neon
#endif

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    const char* name;
};

// Active table; chosen once from CPU capabilities on first use.
const Ops& ops();
const char* active_name();

// Selects "scalar", "avx2", "neon", or "auto". Returns false (and leaves the
// table unchanged) when the variant is not available on this build/CPU.
bool force_impl(const char* name);

inline double dot(const double* a, const double* b, std::size_t n) { return ops().dot(a, b, n); }
inline double sqdist(const double* a, const double* b, std::size_t n) { return ops().sqdist(a, b, n); }
inline double dist(const double* a, const double* b, std::size_t n) { return std::sqrt(ops().sqdist(a, b, n)); }
inline double sum(const double* x, std::size_t n) { return ops().sum(x, n); }
inline double sumsq(const double* x, std::size_t n) { return ops().sumsq(x, n); }
inline void axpy(double* y, double a, const double* x, std::size_t n) { ops().axpy(y, a, x, n); }
inline void scale(double* y, double a, std::size_t n) { ops().scale(y, a, n); }

}  // namespace ismp::kernels
