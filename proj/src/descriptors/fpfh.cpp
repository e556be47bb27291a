#include "ismp/descriptors/fpfh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "ismp/parallel.hpp"

namespace ismp {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline std::size_t feature_bin(double v, double lo, double hi, std::size_t bins) {
    const double t = static_cast<double>(bins) * (v - lo) / (hi - lo);
    const long long b = static_cast<long long>(std::floor(t));
    if (b < 0) return 0;
    if (b >= static_cast<long long>(bins)) return bins - 1;
    return static_cast<std::size_t>(b);
}

// Darboux-frame angle triple for one ordered pair.  Returns false for pairs
// whose frame is undefined (source normal parallel to the connecting line).
bool pair_angles(const Point3& ps, const Point3& ns, const Point3& pt, const Point3& nt,
                 double dist, double* alpha, double* phi, double* theta) {
    const Point3 dhat = (pt - ps) / dist;
    const Point3& u = ns;
    Point3 v = dhat.cross(u);
    const double vn = v.norm();
    if (vn < 1e-12) return false;
    v = v / vn;
    const Point3 w = u.cross(v);
    *alpha = v.dot(nt);
    *phi = u.dot(dhat);
    const double wt = w.dot(nt);
    const double ut = u.dot(nt);
    // Anti-parallel normals put theta on the atan2 seam, where the sign of a
    // structurally-zero w·nt decides between +pi and -pi (ten bins apart for
    // the same circular angle).  Pin the seam to +pi.
    *theta = std::abs(wt) <= 1e-9 && ut < 0.0 ? M_PI : std::atan2(wt, ut);
    return true;
}

}  // namespace

FeatureMatrix fpfh(const PointCloud& cloud, const std::vector<std::size_t>& query_indices,
                   const FpfhConfig& config, Warnings* warnings) {
    return fpfh(cloud, NeighborIndex(cloud), query_indices, config, warnings);
}

FeatureMatrix fpfh(const PointCloud& cloud, const NeighborIndex& index,
                   const std::vector<std::size_t>& query_indices, const FpfhConfig& config,
                   Warnings* warnings) {
    if (!cloud.has_normals())
        throw Error("descriptors", "MissingNormals", "fpfh requires estimated normals");
    if (config.bins_per_feature < 2)
        throw Error("descriptors", "BadCount", "bins_per_feature must be at least 2");
    if (config.k_spfh < 2)
        throw Error("descriptors", "BadCount", "k_spfh must be at least 2");
    for (std::size_t q : query_indices)
        if (q >= cloud.size())
            throw Error("descriptors", "BadCount", "query index " + std::to_string(q) +
                                                       " out of range");

    const std::size_t n = cloud.size();
    const std::size_t bins = config.bins_per_feature;
    const std::size_t dims = 3 * bins;
    const std::size_t k = std::min(config.k_spfh, n > 0 ? n - 1 : 0);

    // SPFH for every point: raw pair counts over its k nearest neighbours.
    // Neighbour lists are kept for the weighting pass below.
    std::vector<double> spfh(n * dims, 0.0);
    std::vector<std::vector<Neighbor>> neighbors(n);
    std::atomic<std::size_t> zero_pairs{0};
    std::atomic<std::size_t> flat_pairs{0};

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            std::vector<Neighbor> hits = index.knn(cloud[p], std::min(k + 1, n));
            std::vector<Neighbor>& kept = neighbors[p];
            kept.reserve(k);
            for (const Neighbor& h : hits) {
                if (h.index == p) continue;
                if (kept.size() == k) break;
                kept.push_back(h);
            }
            double* hist = spfh.data() + p * dims;
            for (const Neighbor& h : kept) {
                if (h.sqdist == 0.0) {
                    zero_pairs.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
                const double dist = std::sqrt(h.sqdist);
                const Point3& np = cloud.normals()[p];
                const Point3& nq = cloud.normals()[h.index];
                const Point3 dhat = (cloud[h.index] - cloud[p]) / dist;
                // Source = endpoint whose normal makes the smaller angle with
                // the connecting line.  Near-parallel normals make that an FP
                // coin flip that rigid motion can reverse, so ties within 1e-9
                // fall back to the point index instead.
                const double mp = std::abs(np.dot(dhat));
                const double mq = std::abs(nq.dot(dhat));
                const bool p_is_source = std::abs(mp - mq) <= 1e-9 ? p < h.index : mp > mq;
                double alpha, phi, theta;
                bool ok;
                if (p_is_source)
                    ok = pair_angles(cloud[p], np, cloud[h.index], nq, dist, &alpha, &phi, &theta);
                else
                    ok = pair_angles(cloud[h.index], nq, cloud[p], np, dist, &alpha, &phi, &theta);
                if (!ok) {
                    flat_pairs.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
                hist[feature_bin(alpha, -1.0, 1.0, bins)] += 1.0;
                hist[bins + feature_bin(phi, -1.0, 1.0, bins)] += 1.0;
                hist[2 * bins + feature_bin(theta, -kPi, kPi, bins)] += 1.0;
            }
        }
    });

    FeatureMatrix out(query_indices.size(), dims);
    out.row_meaning = RowMeaning::PerPatch;
    out.provenance = Provenance::Fpfh;
    parallel_for(query_indices.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t qi = begin; qi < end; ++qi) {
            const std::size_t p = query_indices[qi];
            double* row = out.row(qi);
            const double* own = spfh.data() + p * dims;
            std::copy(own, own + dims, row);
            std::size_t weighted = 0;
            std::vector<double> acc(dims, 0.0);
            for (const Neighbor& h : neighbors[p]) {
                if (h.sqdist == 0.0) continue;
                const double w = 1.0 / std::sqrt(h.sqdist);
                const double* nb = spfh.data() + h.index * dims;
                for (std::size_t c = 0; c < dims; ++c) acc[c] += w * nb[c];
                ++weighted;
            }
            if (weighted > 0) {
                const double inv_k = 1.0 / static_cast<double>(weighted);
                for (std::size_t c = 0; c < dims; ++c) row[c] += inv_k * acc[c];
            }
            // Percent convention: each sub-histogram sums to 100.  A block
            // with no valid pairs collapses to the central (all-angles-zero)
            // bin.
            for (std::size_t f = 0; f < 3; ++f) {
                double* block = row + f * bins;
                double total = 0.0;
                for (std::size_t b = 0; b < bins; ++b) total += block[b];
                if (total > 0.0) {
                    const double scale = 100.0 / total;
                    for (std::size_t b = 0; b < bins; ++b) block[b] *= scale;
                } else {
                    std::fill(block, block + bins, 0.0);
                    block[bins / 2] = 100.0;
                }
            }
        }
    });

    if (std::size_t z = zero_pairs.load(); z > 0)
        warn(warnings, "descriptors: " + std::to_string(z) + " coincident neighbor pairs skipped");
    if (std::size_t f = flat_pairs.load(); f > 0)
        warn(warnings, "descriptors: " + std::to_string(f) +
                           " pairs with degenerate Darboux frame skipped");
    return out;
}

}  // namespace ismp
