#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "ismp/kernels/kernels.hpp"
#include "support/oracles.hpp"

using namespace ismp;

namespace {

// Equivalence tolerance between scalar and vectorized variants: FMA and
// lane-wise accumulation reassociate, so results agree to rounding, not bit.
constexpr double kRelTol = 1e-12;

bool close(double a, double b, double scale) {
    return std::abs(a - b) <= kRelTol * std::max(1.0, scale);
}

struct ForcedImpl {
    explicit ForcedImpl(const char* name) { REQUIRE(kernels::force_impl(name)); }
    ~ForcedImpl() { kernels::force_impl("auto"); }
};

}  // namespace

TEST_CASE("force_impl selects and restores variants") {
    CHECK(kernels::force_impl("scalar"));
    CHECK(std::string(kernels::active_name()) == "scalar");
    CHECK_FALSE(kernels::force_impl("bogus"));
    CHECK(std::string(kernels::active_name()) == "scalar");
    CHECK(kernels::force_impl("auto"));
#if defined(ISMP_KERNELS_HAVE_AVX2)
    CHECK_FALSE(kernels::force_impl("neon"));
#endif
#if defined(ISMP_KERNELS_HAVE_NEON)
    CHECK_FALSE(kernels::force_impl("avx2"));
#endif
}

TEST_CASE("vectorized reductions match scalar across lengths") {
    const char* variant = nullptr;
#if defined(ISMP_KERNELS_HAVE_AVX2)
    if (kernels::force_impl("avx2")) variant = "avx2";
#endif
#if defined(ISMP_KERNELS_HAVE_NEON)
    if (kernels::force_impl("neon")) variant = "neon";
#endif
    kernels::force_impl("auto");
    if (variant == nullptr) {
        MESSAGE("no vector variant available on this machine, scalar-only build");
        return;
    }

    oracle::Rng rng(42);
    for (std::size_t n = 0; n <= 67; ++n) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.uniform(-10.0, 10.0);
            b[i] = rng.uniform(-10.0, 10.0);
        }
        double s_dot, s_sq, s_sum, s_sumsq;
        {
            ForcedImpl f("scalar");
            s_dot = kernels::ops().dot(a.data(), b.data(), n);
            s_sq = kernels::ops().sqdist(a.data(), b.data(), n);
            s_sum = kernels::ops().sum(a.data(), n);
            s_sumsq = kernels::ops().sumsq(a.data(), n);
        }
        ForcedImpl f(variant);
        const double scale = 10.0 * 10.0 * static_cast<double>(n + 1);
        CHECK(close(kernels::ops().dot(a.data(), b.data(), n), s_dot, scale));
        CHECK(close(kernels::ops().sqdist(a.data(), b.data(), n), s_sq, scale));
        CHECK(close(kernels::ops().sum(a.data(), n), s_sum, scale));
        CHECK(close(kernels::ops().sumsq(a.data(), n), s_sumsq, scale));
    }
}

TEST_CASE("vectorized updates match scalar elementwise") {
    bool have_vector = false;
#if defined(ISMP_KERNELS_HAVE_AVX2) || defined(ISMP_KERNELS_HAVE_NEON)
    have_vector = std::string(kernels::active_name()) != "scalar";
#endif
    if (!have_vector) return;
    const char* variant = kernels::active_name();

    oracle::Rng rng(7);
    for (std::size_t n : {0UL, 1UL, 3UL, 4UL, 5UL, 8UL, 17UL, 64UL, 65UL}) {
        std::vector<double> x(n), y0(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform(-5.0, 5.0);
            y0[i] = rng.uniform(-5.0, 5.0);
        }
        std::vector<double> ys = y0, yv = y0;
        {
            ForcedImpl f("scalar");
            kernels::ops().axpy(ys.data(), 1.5, x.data(), n);
            kernels::ops().scale(ys.data(), -0.25, n);
        }
        {
            ForcedImpl f(variant);
            kernels::ops().axpy(yv.data(), 1.5, x.data(), n);
            kernels::ops().scale(yv.data(), -0.25, n);
        }
        for (std::size_t i = 0; i < n; ++i) CHECK(close(ys[i], yv[i], 20.0));
    }
}

TEST_CASE("reductions agree with straightforward loops") {
    oracle::Rng rng(3);
    std::vector<double> a(33), b(33);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.gaussian();
        b[i] = rng.gaussian();
    }
    double dot = 0.0, sq = 0.0, sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        const double d = a[i] - b[i];
        sq += d * d;
        sum += a[i];
        sumsq += a[i] * a[i];
    }
    CHECK(kernels::dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-12));
    CHECK(kernels::sqdist(a.data(), b.data(), a.size()) == doctest::Approx(sq).epsilon(1e-12));
    CHECK(kernels::sum(a.data(), a.size()) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(kernels::sumsq(a.data(), a.size()) == doctest::Approx(sumsq).epsilon(1e-12));
    CHECK(kernels::dist(a.data(), b.data(), a.size()) ==
          doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
}
