#pragma once

// Seeded geometry used across the test binaries: an asymmetric closed
// surface for registration recovery, plus rigid-motion helpers.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ismp/geometry/cloud.hpp"
#include "ismp/registration/rigid.hpp"
#include "support/oracles.hpp"

namespace testgen {

// Sphere with a low-order angular radius modulation: smooth, closed, and with
// no rotational symmetry, so its pose is uniquely recoverable.
inline ismp::PointCloud bumpy_cloud(std::uint64_t seed, std::size_t n) {
    oracle::Rng rng(seed);
    std::vector<ismp::Point3> pts;
    pts.reserve(n);
    while (pts.size() < n) {
        double x, y, z, q;
        do {
            x = rng.uniform(-1.0, 1.0);
            y = rng.uniform(-1.0, 1.0);
            z = rng.uniform(-1.0, 1.0);
            q = x * x + y * y + z * z;
        } while (q < 1e-6 || q > 1.0);
        const double inv = 1.0 / std::sqrt(q);
        x *= inv;
        y *= inv;
        z *= inv;
        const double r = 1.0 + 0.35 * x * y + 0.25 * std::sin(2.0 * z) + 0.2 * x * z * z +
                         0.15 * std::cos(3.0 * y);
        pts.push_back({r * x, r * y, r * z});
    }
    return ismp::PointCloud(std::move(pts));
}

inline ismp::RigidTransform axis_angle(double ux, double uy, double uz, double angle_rad) {
    const double n = std::sqrt(ux * ux + uy * uy + uz * uz);
    ux /= n;
    uy /= n;
    uz /= n;
    const double c = std::cos(angle_rad), s = std::sin(angle_rad), t = 1.0 - c;
    ismp::RigidTransform r;
    r.rotation = {t * ux * ux + c,      t * ux * uy - s * uz, t * ux * uz + s * uy,
                  t * ux * uy + s * uz, t * uy * uy + c,      t * uy * uz - s * ux,
                  t * ux * uz - s * uy, t * uy * uz + s * ux, t * uz * uz + c};
    return r;
}

// Geodesic angle in degrees between two rotations.
inline double rotation_error_deg(const std::array<double, 9>& a, const std::array<double, 9>& b) {
    double trace = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trace += a[i * 3 + j] * b[i * 3 + j];
    const double c = std::min(1.0, std::max(-1.0, (trace - 1.0) / 2.0));
    return std::acos(c) * 180.0 / M_PI;
}

inline double max_abs_diff(const ismp::FeatureMatrix& a, const ismp::FeatureMatrix& b) {
    if (a.rows != b.rows || a.dims != b.dims) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace testgen
