#pragma once

// Brute-force reference implementations the optimized library code is checked
// against, plus seeded input generators.  Everything here is written as the
// most literal possible loop so the oracle itself is easy to audit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ismp/features/matrix.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/geometry/point3.hpp"

namespace oracle {

// ------------------------------------------------------------ rng helpers

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double u01() { return (gen() >> 11) * 0x1.0p-53; }               // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
    double gaussian() {
        // Box-Muller on two fresh uniforms.
        double u = 0.0;
        do {
            u = u01();
        } while (u <= 0.0);
        const double v = u01();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
    }
};

inline std::vector<ismp::Point3> random_points(Rng& rng, std::size_t n, double extent = 1.0) {
    std::vector<ismp::Point3> pts(n);
    for (auto& p : pts)
        p = {rng.uniform(-extent, extent), rng.uniform(-extent, extent),
             rng.uniform(-extent, extent)};
    return pts;
}

inline ismp::FeatureMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t dims) {
    ismp::FeatureMatrix m(rows, dims);
    for (double& v : m.values) v = rng.gaussian();
    return m;
}

// ------------------------------------------------------------ geometry

struct Hit {
    std::size_t index;
    double sqdist;
};

inline double sq(const ismp::Point3& a, const ismp::Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

inline std::vector<Hit> knn(const std::vector<ismp::Point3>& pts, const ismp::Point3& q,
                            std::size_t k) {
    std::vector<Hit> all;
    for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({i, sq(pts[i], q)});
    std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
        if (a.sqdist != b.sqdist) return a.sqdist < b.sqdist;
        return a.index < b.index;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

inline std::vector<Hit> radius(const std::vector<ismp::Point3>& pts, const ismp::Point3& q,
                               double r) {
    std::vector<Hit> all;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (sq(pts[i], q) <= r * r) all.push_back({i, sq(pts[i], q)});
    std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
        if (a.sqdist != b.sqdist) return a.sqdist < b.sqdist;
        return a.index < b.index;
    });
    return all;
}

inline std::vector<std::size_t> fps(const std::vector<ismp::Point3>& pts, std::size_t m,
                                    std::size_t seed_index) {
    std::vector<std::size_t> chosen{seed_index};
    std::vector<char> taken(pts.size(), 0);
    taken[seed_index] = 1;
    while (chosen.size() < m && chosen.size() < pts.size()) {
        std::size_t best = pts.size();
        double best_d = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (taken[i]) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c : chosen) nearest = std::min(nearest, sq(pts[i], pts[c]));
            if (nearest > best_d) {
                best_d = nearest;
                best = i;
            }
        }
        if (best == pts.size()) break;
        chosen.push_back(best);
        taken[best] = 1;
    }
    return chosen;
}

// ------------------------------------------------------------ filtering

// Literal dense version of the feature filter: distance matrix, similarity
// weights, symmetric normalization, anomaly-metric diagonal, one smoothing
// step, max rescale.
inline ismp::FeatureMatrix filter(const ismp::FeatureMatrix& x, double alpha, double beta,
                                  double gamma) {
    const std::size_t n = x.rows, d = x.dims;
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = x.at(i, c) - x.at(j, c);
                s += diff * diff;
            }
            m[i][j] = std::sqrt(s);
        }

    std::vector<std::vector<double>> aw(n, std::vector<double>(n, 0.0));
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            aw[i][j] = std::exp(-beta * m[i][j]);
            deg[i] += aw[i][j];
        }

    std::vector<std::vector<double>> lap(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double norm = aw[i][j] / (std::sqrt(deg[i]) * std::sqrt(deg[j]));
            lap[i][j] = (i == j ? 1.0 : 0.0) - norm;
        }
        double mean_off = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) mean_off += m[i][j];
        mean_off /= static_cast<double>(n - 1);
        lap[i][i] += gamma * mean_off;
    }

    ismp::FeatureMatrix out(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += lap[i][j] * x.at(j, c);
            out.at(i, c) = x.at(i, c) + alpha * acc;
        }

    double max_in = -std::numeric_limits<double>::infinity();
    double max_out = -std::numeric_limits<double>::infinity();
    for (const double v : x.values) max_in = std::max(max_in, v);
    for (const double v : out.values) max_out = std::max(max_out, v);
    if (max_in > 0.0 && max_out > 0.0) {
        const double s = max_in / max_out;
        for (double& v : out.values) v *= s;
    }
    return out;
}

// ------------------------------------------------------------ descriptors

// Double-loop FPFH over every point, then the weighted neighbor sum for the
// queried indices.  Mirrors the published construction step by step.
inline ismp::FeatureMatrix fpfh(const ismp::PointCloud& cloud,
                                const std::vector<std::size_t>& queries, std::size_t bins,
                                std::size_t k) {
    const std::size_t n = cloud.size();
    const std::size_t dims = 3 * bins;
    const auto& pts = cloud.points();
    const auto& nrm = cloud.normals();

    auto bin_of = [&](double v, double lo, double hi) {
        const double t = static_cast<double>(bins) * (v - lo) / (hi - lo);
        long b = static_cast<long>(std::floor(t));
        if (b < 0) b = 0;
        if (b >= static_cast<long>(bins)) b = static_cast<long>(bins) - 1;
        return static_cast<std::size_t>(b);
    };

    std::vector<std::vector<Hit>> neighbor_lists(n);
    std::vector<std::vector<double>> spfh(n, std::vector<double>(dims, 0.0));
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<Hit> nb = knn(pts, pts[p], k + 1);
        std::vector<Hit> kept;
        for (const Hit& h : nb) {
            if (h.index == p) continue;
            if (kept.size() == k) break;
            kept.push_back(h);
        }
        neighbor_lists[p] = kept;
        for (const Hit& h : kept) {
            if (h.sqdist == 0.0) continue;
            const double dist = std::sqrt(h.sqdist);
            ismp::Point3 dhat = (pts[h.index] - pts[p]) / dist;
            ismp::Point3 ns = nrm[p], nt = nrm[h.index];
            ismp::Point3 d = dhat;
            const double ms = std::abs(ns.dot(dhat));
            const double mt = std::abs(nt.dot(dhat));
            const bool p_src = std::abs(ms - mt) <= 1e-9 ? p < h.index : ms > mt;
            if (!p_src) {
                // Other endpoint is the source: swap roles, flip the line.
                ns = nrm[h.index];
                nt = nrm[p];
                d = dhat * -1.0;
            }
            const ismp::Point3 u = ns;
            ismp::Point3 v = d.cross(u);
            const double vn = v.norm();
            if (vn < 1e-12) continue;
            v = v / vn;
            const ismp::Point3 w = u.cross(v);
            const double alpha = v.dot(nt);
            const double phi = u.dot(d);
            const double wdn = w.dot(nt);
            const double udn = u.dot(nt);
            // Same +pi seam pin as the library: anti-parallel normals leave
            // the sign of w·nt to round-off.
            const double theta =
                std::abs(wdn) <= 1e-9 && udn < 0.0 ? M_PI : std::atan2(wdn, udn);
            spfh[p][bin_of(alpha, -1.0, 1.0)] += 1.0;
            spfh[p][bins + bin_of(phi, -1.0, 1.0)] += 1.0;
            spfh[p][2 * bins + bin_of(theta, -M_PI, M_PI)] += 1.0;
        }
    }

    ismp::FeatureMatrix out(queries.size(), dims);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const std::size_t p = queries[qi];
        std::vector<double> acc = spfh[p];
        const auto& kept = neighbor_lists[p];
        std::size_t used = 0;
        for (const Hit& h : kept)
            if (h.sqdist > 0.0) ++used;
        for (const Hit& h : kept) {
            if (h.sqdist == 0.0) continue;
            const double wgt = std::sqrt(h.sqdist);
            for (std::size_t c = 0; c < dims; ++c)
                acc[c] += spfh[h.index][c] / (wgt * static_cast<double>(used));
        }
        for (std::size_t block = 0; block < 3; ++block) {
            double s = 0.0;
            for (std::size_t b = 0; b < bins; ++b) s += acc[block * bins + b];
            if (s > 0.0) {
                for (std::size_t b = 0; b < bins; ++b)
                    out.at(qi, block * bins + b) = 100.0 * acc[block * bins + b] / s;
            } else {
                out.at(qi, block * bins + bins / 2) = 100.0;
            }
        }
    }
    return out;
}

// ------------------------------------------------------------ scoring

struct Nn3 {
    double d[3];
    std::size_t idx[3];
};

inline Nn3 nn3(const double* row, const ismp::FeatureMatrix& bank) {
    std::vector<Hit> all;
    for (std::size_t b = 0; b < bank.rows; ++b) {
        double s = 0.0;
        for (std::size_t c = 0; c < bank.dims; ++c) {
            const double diff = row[c] - bank.at(b, c);
            s += diff * diff;
        }
        all.push_back({b, s});
    }
    std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
        if (a.sqdist != b.sqdist) return a.sqdist < b.sqdist;
        return a.index < b.index;
    });
    Nn3 out{};
    for (int i = 0; i < 3; ++i) {
        out.d[i] = std::sqrt(all[static_cast<std::size_t>(i)].sqdist);
        out.idx[i] = all[static_cast<std::size_t>(i)].index;
    }
    return out;
}

// 1 - exp(d1) / (exp(d1) + exp(d2) + exp(d3)), evaluated the shifted way.
inline double reweight(double d1, double d2, double d3) {
    const double e1 = std::exp(d1 - d1), e2 = std::exp(d2 - d1), e3 = std::exp(d3 - d1);
    return 1.0 - e1 / (e1 + e2 + e3);
}

inline std::vector<std::size_t> coreset(const ismp::FeatureMatrix& feats, std::size_t target) {
    std::vector<std::size_t> chosen{0};
    std::vector<char> taken(feats.rows, 0);
    taken[0] = 1;
    while (chosen.size() < target) {
        std::size_t best = feats.rows;
        double best_d = -1.0;
        for (std::size_t i = 0; i < feats.rows; ++i) {
            if (taken[i]) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c : chosen) {
                double s = 0.0;
                for (std::size_t col = 0; col < feats.dims; ++col) {
                    const double diff = feats.at(i, col) - feats.at(c, col);
                    s += diff * diff;
                }
                nearest = std::min(nearest, s);
            }
            if (nearest > best_d) {
                best_d = nearest;
                best = i;
            }
        }
        if (best == feats.rows) break;
        chosen.push_back(best);
        taken[best] = 1;
    }
    return chosen;
}

// ------------------------------------------------------------ evaluation

// AUROC by direct pair counting: every (positive, negative) pair contributes
// 1 when the positive scores higher, 0.5 on ties.
inline double auroc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

}  // namespace oracle
