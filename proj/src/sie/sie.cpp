#include "ismp/sie/sie.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ismp/geometry/cloud_io.hpp"
#include "ismp/parallel.hpp"

namespace ismp {

const char* slice_name(SliceId id) {
    switch (id) {
        case SliceId::P1: return "P1";
        case SliceId::P2: return "P2";
        case SliceId::P3: return "P3";
        case SliceId::P4: return "P4";
    }
    return "?";
}

SplitResult split_at_mid(const PointCloud& cloud) {
    const Aabb box = cloud.bounds();
    SplitResult out;
    out.z_mid = (box.min.z + box.max.z) / 2.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud[i].z >= out.z_mid)
            out.upper.push_back(i);
        else
            out.lower.push_back(i);
    }
    return out;
}

InfoReport info_measures(const PointCloud& cloud) {
    const Aabb box = cloud.bounds();
    InfoReport rep;
    rep.z_min = box.min.z;
    rep.z_max = box.max.z;
    rep.z_mid = (box.min.z + box.max.z) / 2.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double z = cloud[i].z;
        const double top_term = rep.z_max - z;
        rep.i_top += top_term;
        rep.i_global += top_term + std::max(0.0, z - rep.z_mid);
    }
    return rep;
}

namespace {

struct RasterFrame {
    std::size_t rows, cols;
    double min_x, min_y, max_x, max_y;
    double span_x, span_y;
};

RasterFrame make_frame(const Aabb& box, std::size_t resolution, Warnings* warnings) {
    RasterFrame f;
    f.min_x = box.min.x;
    f.min_y = box.min.y;
    f.max_x = box.max.x;
    f.max_y = box.max.y;
    f.span_x = f.max_x - f.min_x;
    f.span_y = f.max_y - f.min_y;
    f.cols = f.span_x > 0.0 ? resolution : 1;
    f.rows = f.span_y > 0.0 ? resolution : 1;
    if (f.cols == 1 || f.rows == 1)
        warn(warnings, "sie: degenerate xy extent, raster collapsed to " +
                           std::to_string(f.rows) + "x" + std::to_string(f.cols));
    return f;
}

std::size_t to_cell(double v, double lo, double span, std::size_t cells) {
    if (cells == 1 || span <= 0.0) return 0;
    const double t = static_cast<double>(cells) * (v - lo) / span;
    const auto c = static_cast<long long>(std::floor(t));
    if (c < 0) return 0;
    if (c >= static_cast<long long>(cells)) return cells - 1;
    return static_cast<std::size_t>(c);
}

}  // namespace

std::array<ProjectionSlice, 4> render_slices(const PointCloud& cloud, std::size_t resolution,
                                             Warnings* warnings) {
    if (resolution < 2)
        throw Error("sie", "BadCount", "raster resolution must be at least 2");
    const Aabb box = cloud.bounds();
    const double z_mid = (box.min.z + box.max.z) / 2.0;
    const RasterFrame frame = make_frame(box, resolution, warnings);

    std::array<ProjectionSlice, 4> slices;
    slices[0].spec = {SliceId::P1, SliceSubset::Whole, SliceCamera::AboveLookingDown, box.max.z};
    slices[1].spec = {SliceId::P2, SliceSubset::UpperHalf, SliceCamera::BelowLookingUp, z_mid};
    slices[2].spec = {SliceId::P3, SliceSubset::LowerHalf, SliceCamera::AboveLookingDown, z_mid};
    slices[3].spec = {SliceId::P4, SliceSubset::Whole, SliceCamera::BelowLookingUp, box.min.z};

    parallel_for(4, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            ProjectionSlice& slice = slices[s];
            slice.rows = frame.rows;
            slice.cols = frame.cols;
            slice.window_min_x = frame.min_x;
            slice.window_min_y = frame.min_y;
            slice.window_max_x = frame.max_x;
            slice.window_max_y = frame.max_y;
            const bool from_above = slice.spec.camera == SliceCamera::AboveLookingDown;
            // z of the point currently winning each pixel (nearest to camera).
            std::vector<double> zbuf(frame.rows * frame.cols,
                                     from_above ? -std::numeric_limits<double>::infinity()
                                                : std::numeric_limits<double>::infinity());
            slice.depth.assign(frame.rows * frame.cols, 0.0);
            slice.occupied.assign(frame.rows * frame.cols, 0);
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const Point3& p = cloud[i];
                if (slice.spec.subset == SliceSubset::UpperHalf && p.z < z_mid) continue;
                if (slice.spec.subset == SliceSubset::LowerHalf && p.z >= z_mid) continue;
                const std::size_t c = to_cell(p.x, frame.min_x, frame.span_x, frame.cols);
                const std::size_t r = to_cell(p.y, frame.min_y, frame.span_y, frame.rows);
                const std::size_t cell = r * frame.cols + c;
                if (from_above ? p.z > zbuf[cell] : p.z < zbuf[cell]) {
                    zbuf[cell] = p.z;
                    slice.occupied[cell] = 1;
                }
            }
            for (std::size_t cell = 0; cell < zbuf.size(); ++cell) {
                if (!slice.occupied[cell]) continue;
                const double z = zbuf[cell];
                slice.depth[cell] = from_above ? slice.spec.depth_origin - z
                                               : z - slice.spec.depth_origin;
            }
        }
    });
    return slices;
}

DiscrepancyReport depth_discrepancy(const PointCloud& cloud, double k) {
    const Aabb box = cloud.bounds();
    const double z_mid = (box.min.z + box.max.z) / 2.0;
    const double z_max = box.max.z;

    // Delta is well defined for every point; the population statistics use all
    // of them so a nearly-empty upper half still has a meaningful baseline.
    DiscrepancyReport rep;
    rep.k = k;
    double sum = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double z = cloud[i].z;
        const double d = (z_max - z) - (z - z_mid);
        sum += d;
        if (z >= z_mid) {
            rep.upper_indices.push_back(i);
            rep.delta.push_back(d);
        }
    }
    const double n = static_cast<double>(cloud.size());
    rep.mu = sum / n;
    double var = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double z = cloud[i].z;
        const double d = (z_max - z) - (z - z_mid);
        var += (d - rep.mu) * (d - rep.mu);
    }
    rep.sigma = std::sqrt(var / n);
    for (std::size_t u = 0; u < rep.upper_indices.size(); ++u)
        if (std::abs(rep.delta[u] - rep.mu) > k * rep.sigma)
            rep.flagged.push_back(rep.upper_indices[u]);
    return rep;
}

namespace {

void slice_stats(const ProjectionSlice& slice, double* occupied_fraction, double* mean,
                 double* stddev, double* dmin, double* dmax, std::size_t* count) {
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t n = 0;
    for (std::size_t i = 0; i < slice.depth.size(); ++i) {
        if (!slice.occupied[i]) continue;
        ++n;
        sum += slice.depth[i];
        lo = std::min(lo, slice.depth[i]);
        hi = std::max(hi, slice.depth[i]);
    }
    *count = n;
    *occupied_fraction =
        slice.depth.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(slice.depth.size());
    if (n == 0) {
        *mean = *stddev = *dmin = *dmax = 0.0;
        return;
    }
    *mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < slice.depth.size(); ++i)
        if (slice.occupied[i]) var += (slice.depth[i] - *mean) * (slice.depth[i] - *mean);
    *stddev = std::sqrt(var / static_cast<double>(n));
    *dmin = lo;
    *dmax = hi;
}

void histogram_block(const std::vector<double>& vals, std::size_t bins, double* out) {
    std::fill(out, out + bins, 0.0);
    if (vals.empty()) return;
    double lo = vals[0], hi = vals[0];
    for (double v : vals) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    const double frac = 1.0 / static_cast<double>(vals.size());
    for (double v : vals) {
        std::size_t b = 0;
        if (span > 0.0) {
            const double t = static_cast<double>(bins) * (v - lo) / span;
            b = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(std::floor(std::max(t, 0.0))));
        }
        out[b] += frac;
    }
}

}  // namespace

FeatureMatrix global_descriptor(const std::vector<const ProjectionSlice*>& slices,
                                std::size_t bins) {
    if (slices.empty()) throw Error("sie", "BadCount", "no slices given");
    if (bins < 1) throw Error("sie", "BadCount", "bins must be positive");
    const std::size_t block = 3 + 2 * bins;
    FeatureMatrix out(1, slices.size() * block);
    out.provenance = Provenance::Global;
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const ProjectionSlice& slice = *slices[s];
        double* dst = out.row(0) + s * block;
        double occ, mean, sd, dmin, dmax;
        std::size_t n;
        slice_stats(slice, &occ, &mean, &sd, &dmin, &dmax, &n);
        dst[0] = occ;
        dst[1] = mean;
        dst[2] = sd;

        std::vector<double> depths;
        depths.reserve(n);
        for (std::size_t i = 0; i < slice.depth.size(); ++i)
            if (slice.occupied[i]) depths.push_back(slice.depth[i]);
        histogram_block(depths, bins, dst + 3);

        // Gradient magnitudes between horizontally / vertically adjacent
        // occupied pixels.
        std::vector<double> grads;
        for (std::size_t r = 0; r < slice.rows; ++r)
            for (std::size_t c = 0; c < slice.cols; ++c) {
                if (!slice.occupied_at(r, c)) continue;
                if (c + 1 < slice.cols && slice.occupied_at(r, c + 1))
                    grads.push_back(std::abs(slice.depth_at(r, c) - slice.depth_at(r, c + 1)));
                if (r + 1 < slice.rows && slice.occupied_at(r + 1, c))
                    grads.push_back(std::abs(slice.depth_at(r, c) - slice.depth_at(r + 1, c)));
            }
        histogram_block(grads, bins, dst + 3 + bins);
    }
    return out;
}

FeatureMatrix global_descriptor(const std::array<ProjectionSlice, 4>& slices, std::size_t bins) {
    return global_descriptor(
        std::vector<const ProjectionSlice*>{&slices[0], &slices[1], &slices[2], &slices[3]}, bins);
}

FeatureMatrix fuse_global(const FeatureMatrix& local, const FeatureMatrix& global) {
    if (global.rows != 1)
        throw Error("sie", "BadCount", "global descriptor must be a single row");
    std::vector<double> g(global.values);
    if (!g.empty()) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= static_cast<double>(g.size());
        double var = 0.0;
        for (double v : g) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / static_cast<double>(g.size()));
        if (sd < 1e-12) sd = 1.0;
        for (double& v : g) v = (v - mean) / sd;
    }
    FeatureMatrix out(local.rows, local.dims + global.dims);
    out.row_meaning = local.row_meaning;
    out.provenance = Provenance::Concat;
    for (std::size_t r = 0; r < local.rows; ++r) {
        double* dst = out.row(r);
        const double* src = local.row(r);
        std::copy(src, src + local.dims, dst);
        std::copy(g.begin(), g.end(), dst + local.dims);
    }
    return out;
}

void write_pgm(const ProjectionSlice& slice, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("sie", "IoError", "cannot open for writing: " + path);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool any = false;
    for (std::size_t i = 0; i < slice.depth.size(); ++i)
        if (slice.occupied[i]) {
            any = true;
            lo = std::min(lo, slice.depth[i]);
            hi = std::max(hi, slice.depth[i]);
        }
    const double span = any ? hi - lo : 0.0;
    out << "P5\n" << slice.cols << ' ' << slice.rows << "\n255\n";
    // Top image row = max y, so the raster reads like a natural plan view.
    for (std::size_t r = slice.rows; r-- > 0;) {
        for (std::size_t c = 0; c < slice.cols; ++c) {
            unsigned char v = 0;
            if (slice.occupied_at(r, c)) {
                // Occupied pixels are kept off 0 so emptiness stays visible.
                const double t = span > 0.0 ? (slice.depth_at(r, c) - lo) / span : 1.0;
                v = static_cast<unsigned char>(1.0 + std::round(254.0 * t));
            }
            out.put(static_cast<char>(v));
        }
    }
    if (!out) throw Error("sie", "IoError", "write failed: " + path);
}

void write_slice_stats(const ProjectionSlice& slice, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("sie", "IoError", "cannot open for writing: " + path);
    double occ, mean, sd, dmin, dmax;
    std::size_t n;
    slice_stats(slice, &occ, &mean, &sd, &dmin, &dmax, &n);
    out << "slice=" << slice_name(slice.spec.id) << '\n';
    out << "rows=" << slice.rows << '\n';
    out << "cols=" << slice.cols << '\n';
    out << "depth_origin=" << format_value(slice.spec.depth_origin) << '\n';
    out << "window_min_x=" << format_value(slice.window_min_x) << '\n';
    out << "window_min_y=" << format_value(slice.window_min_y) << '\n';
    out << "window_max_x=" << format_value(slice.window_max_x) << '\n';
    out << "window_max_y=" << format_value(slice.window_max_y) << '\n';
    out << "occupied=" << n << '\n';
    out << "occupied_fraction=" << format_value(occ) << '\n';
    out << "depth_min=" << format_value(dmin) << '\n';
    out << "depth_max=" << format_value(dmax) << '\n';
    out << "depth_mean=" << format_value(mean) << '\n';
    out << "depth_std=" << format_value(sd) << '\n';
    if (!out) throw Error("sie", "IoError", "write failed: " + path);
}

}  // namespace ismp
