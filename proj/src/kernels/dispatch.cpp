#include "ismp/kernels/kernels.hpp"

#include <cstring>

namespace ismp::kernels {

namespace {

constexpr Ops kScalarOps = {
    scalar::dot, scalar::sqdist, scalar::sum, scalar::sumsq, scalar::axpy, scalar::scale, "scalar",
};

#if defined(ISMP_KERNELS_HAVE_AVX2)
constexpr Ops kAvx2Ops = {
    avx2::dot, avx2::sqdist, avx2::sum, avx2::sumsq, avx2::axpy, avx2::scale, "avx2",
};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

#if defined(ISMP_KERNELS_HAVE_NEON)
constexpr Ops kNeonOps = {
    neon::dot, neon::sqdist, neon::sum, neon::sumsq, neon::axpy, neon::scale, "neon",
};
#endif

const Ops* pick_best() {
#if defined(ISMP_KERNELS_HAVE_AVX2)
    if (cpu_has_avx2()) return &kAvx2Ops;
#endif
#if defined(ISMP_KERNELS_HAVE_NEON)
    return &kNeonOps;
#endif
    return &kScalarOps;
}

const Ops* g_active = nullptr;

}  // namespace

const Ops& ops() {
    if (g_active == nullptr) g_active = pick_best();
    return *g_active;
}

const char* active_name() { return ops().name; }

bool force_impl(const char* name) {
    if (std::strcmp(name, "auto") == 0) {
        g_active = pick_best();
        return true;
    }
    if (std::strcmp(name, "scalar") == 0) {
        g_active = &kScalarOps;
        return true;
    }
#if defined(ISMP_KERNELS_HAVE_AVX2)
    if (std::strcmp(name, "avx2") == 0 && cpu_has_avx2()) {
        g_active = &kAvx2Ops;
        return true;
    }
#endif
#if defined(ISMP_KERNELS_HAVE_NEON)
    if (std::strcmp(name, "neon") == 0) {
        g_active = &kNeonOps;
        return true;
    }
#endif
    return false;
}

}  // namespace ismp::kernels
