#include "ismp/eval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ismp/geometry/point3.hpp"

namespace ismp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Explicit uniform/gaussian draws so the stream is a pure function of the
// engine, not of library distribution internals.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
}

double gaussian(std::mt19937_64& rng) {
    const double u1 = uniform_open(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

void sample_surface(BaseShape shape, std::size_t n, std::mt19937_64& rng,
                    std::vector<Point3>* points, std::vector<Point3>* normals) {
    points->reserve(n);
    normals->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (shape) {
            case BaseShape::Sphere: {
                Point3 d{gaussian(rng), gaussian(rng), gaussian(rng)};
                const double len = d.norm();
                if (len < 1e-12) d = {0, 0, 1};
                else d = d / len;
                points->push_back(d);
                normals->push_back(d);
                break;
            }
            case BaseShape::Box: {
                const std::size_t face = static_cast<std::size_t>(rng() % 6);
                const double u = 2.0 * uniform01(rng) - 1.0;
                const double v = 2.0 * uniform01(rng) - 1.0;
                const double s = face % 2 == 0 ? 1.0 : -1.0;
                Point3 p, nrm;
                switch (face / 2) {
                    case 0: p = {s, u, v}; nrm = {s, 0, 0}; break;
                    case 1: p = {u, s, v}; nrm = {0, s, 0}; break;
                    default: p = {u, v, s}; nrm = {0, 0, s}; break;
                }
                points->push_back(p);
                normals->push_back(nrm);
                break;
            }
            case BaseShape::Torus: {
                const double big_r = 1.0, small_r = 0.35;
                const double u = 2.0 * kPi * uniform01(rng);
                double v;
                // Rejection keeps the sampling uniform in surface area.
                do {
                    v = 2.0 * kPi * uniform01(rng);
                } while (uniform01(rng) >= (big_r + small_r * std::cos(v)) / (big_r + small_r));
                const double ring = big_r + small_r * std::cos(v);
                points->push_back({ring * std::cos(u), ring * std::sin(u), small_r * std::sin(v)});
                normals->push_back({std::cos(v) * std::cos(u), std::cos(v) * std::sin(u),
                                    std::sin(v)});
                break;
            }
        }
    }
}

double bbox_diagonal(const std::vector<Point3>& pts) {
    Point3 lo = pts.front(), hi = pts.front();
    for (const Point3& p : pts) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    return (hi - lo).norm();
}

}  // namespace

BaseShape base_shape_from_name(const std::string& name) {
    if (name == "sphere") return BaseShape::Sphere;
    if (name == "box") return BaseShape::Box;
    if (name == "torus") return BaseShape::Torus;
    throw Error("eval", "BadParams", "unknown shape '" + name + "'");
}

AnomalyKind anomaly_from_name(const std::string& name) {
    if (name == "none") return AnomalyKind::None;
    if (name == "bulge") return AnomalyKind::Bulge;
    if (name == "dent") return AnomalyKind::Dent;
    if (name == "blob") return AnomalyKind::Blob;
    if (name == "crop") return AnomalyKind::Crop;
    throw Error("eval", "BadParams", "unknown anomaly '" + name + "'");
}

const char* base_shape_name(BaseShape s) {
    switch (s) {
        case BaseShape::Sphere: return "sphere";
        case BaseShape::Box: return "box";
        case BaseShape::Torus: return "torus";
    }
    return "?";
}

const char* anomaly_name(AnomalyKind a) {
    switch (a) {
        case AnomalyKind::None: return "none";
        case AnomalyKind::Bulge: return "bulge";
        case AnomalyKind::Dent: return "dent";
        case AnomalyKind::Blob: return "blob";
        case AnomalyKind::Crop: return "crop";
    }
    return "?";
}

LabeledSample generate_synthetic(const SynthConfig& cfg) {
    if (cfg.n_points < 1) throw Error("eval", "BadParams", "n_points must be positive");
    if (!(cfg.amplitude >= 0.0) || !std::isfinite(cfg.amplitude))
        throw Error("eval", "BadParams", "amplitude must be finite and nonnegative");
    if (!(cfg.region_fraction > 0.0 && cfg.region_fraction <= 0.5))
        throw Error("eval", "BadParams", "region_fraction must lie in (0, 0.5]");

    std::mt19937_64 rng(cfg.rng_seed);
    std::vector<Point3> pts, nrm;
    sample_surface(cfg.base_shape, cfg.n_points, rng, &pts, &nrm);

    const double diag = bbox_diagonal(pts);
    const double rho = cfg.region_fraction * diag;
    const double amp = cfg.amplitude * diag;
    const std::size_t center_idx = static_cast<std::size_t>(rng() % pts.size());
    const Point3 center = pts[center_idx];
    const Point3 center_normal = nrm[center_idx];

    std::vector<int> labels(pts.size(), 0);
    switch (cfg.anomaly) {
        case AnomalyKind::None:
            break;
        case AnomalyKind::Bulge:
        case AnomalyKind::Dent: {
            const double sign = cfg.anomaly == AnomalyKind::Bulge ? 1.0 : -1.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double d = distance(pts[i], center);
                if (d >= rho) continue;
                const double w = 0.5 * (1.0 + std::cos(kPi * d / rho));
                const double disp = sign * amp * w;
                pts[i] += nrm[i] * disp;
                // Points the defect barely grazes stay labeled normal.
                if (std::abs(disp) > 0.1 * amp) labels[i] = 1;
            }
            break;
        }
        case AnomalyKind::Blob: {
            if (amp > 0.0) {
                const std::size_t blob_n = std::max<std::size_t>(
                    8, static_cast<std::size_t>(0.25 * cfg.region_fraction *
                                                static_cast<double>(cfg.n_points)));
                const Point3 blob_center = center + center_normal * amp;
                for (std::size_t i = 0; i < blob_n; ++i) {
                    const Point3 off{gaussian(rng), gaussian(rng), gaussian(rng)};
                    pts.push_back(blob_center + off * (rho / 4.0));
                    labels.push_back(1);
                }
            }
            break;
        }
        case AnomalyKind::Crop: {
            std::vector<Point3> kept;
            std::vector<double> kept_d;
            std::size_t removed = 0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double d = distance(pts[i], center);
                if (d < rho) {
                    ++removed;
                    continue;
                }
                kept.push_back(pts[i]);
                kept_d.push_back(d);
            }
            pts = std::move(kept);
            labels.assign(pts.size(), 0);
            if (removed > 0) {
                bool any = false;
                for (std::size_t i = 0; i < pts.size(); ++i)
                    if (kept_d[i] < 1.3 * rho) {
                        labels[i] = 1;
                        any = true;
                    }
                // Degenerate ring: mark the point closest to the hole so the
                // object-level label stays consistent with the missing region.
                if (!any && !pts.empty()) {
                    std::size_t best = 0;
                    for (std::size_t i = 1; i < pts.size(); ++i)
                        if (kept_d[i] < kept_d[best]) best = i;
                    labels[best] = 1;
                }
            }
            break;
        }
    }

    const bool object =
        std::any_of(labels.begin(), labels.end(), [](int l) { return l == 1; });
    const std::string id = std::string(base_shape_name(cfg.base_shape)) + "-" +
                           anomaly_name(cfg.anomaly) + "-seed" + std::to_string(cfg.rng_seed);
    return LabeledSample{PointCloud(std::move(pts)), std::move(labels), object, id};
}

}  // namespace ismp
