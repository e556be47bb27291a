#include "ismp/registration/rigid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ismp/kernels/kernels.hpp"
#include "ismp/parallel.hpp"

namespace ismp {

using kernels::ops;

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
    RigidTransform out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += rotation[r * 3 + k] * other.rotation[k * 3 + c];
            out.rotation[r * 3 + c] = acc;
        }
    out.translation = rotate(other.translation) + translation;
    return out;
}

double RigidTransform::orthonormality_error() const {
    double worst = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += rotation[k * 3 + r] * rotation[k * 3 + c];
            const double expect = (r == c) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(acc - expect));
        }
    return worst;
}

RigidTransform fit_rigid(const std::vector<Point3>& src, const std::vector<Point3>& dst) {
    if (src.size() != dst.size())
        throw Error("registration", "BadCount", "point lists differ in length");
    if (src.size() < 3)
        throw Error("registration", "BadCount", "need at least 3 point pairs, got " +
                                                    std::to_string(src.size()));
    const std::size_t n = src.size();
    Point3 cs{0, 0, 0}, cd{0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs = cs / static_cast<double>(n);
    cd = cd / static_cast<double>(n);

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Point3 a = src[i] - cs;
        const Point3 b = dst[i] - cd;
        h(0, 0) += a.x * b.x;
        h(0, 1) += a.x * b.y;
        h(0, 2) += a.x * b.z;
        h(1, 0) += a.y * b.x;
        h(1, 1) += a.y * b.y;
        h(1, 2) += a.y * b.z;
        h(2, 0) += a.z * b.x;
        h(2, 1) += a.z * b.y;
        h(2, 2) += a.z * b.z;
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d r = v * u.transpose();
    if (r.determinant() < 0.0) {
        v.col(2) *= -1.0;
        r = v * u.transpose();
    }
    RigidTransform out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.rotation[i * 3 + j] = r(i, j);
    out.translation = cd - out.rotate(cs);
    return out;
}

namespace {

// Best match of each query row among all candidate rows, scanned ascending so
// distance ties resolve to the lower index.
std::vector<std::size_t> best_rows(const FeatureMatrix& queries, const FeatureMatrix& candidates) {
    std::vector<std::size_t> best(queries.rows, 0);
    parallel_for(queries.rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            double best_d = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (std::size_t c = 0; c < candidates.rows; ++c) {
                const double d = ops().sqdist(queries.row(q), candidates.row(c), queries.dims);
                if (d < best_d) {
                    best_d = d;
                    best_i = c;
                }
            }
            best[q] = best_i;
        }
    });
    return best;
}

bool degenerate_triple(const Point3& a, const Point3& b, const Point3& c) {
    return (b - a).cross(c - a).squared_norm() < 1e-18;
}

}  // namespace

RegistrationResult register_clouds(const std::vector<Point3>& src_points,
                                   const FeatureMatrix& src_features,
                                   const std::vector<Point3>& dst_points,
                                   const FeatureMatrix& dst_features,
                                   const RansacConfig& config, Warnings* warnings) {
    if (src_points.size() != src_features.rows || dst_points.size() != dst_features.rows)
        throw Error("registration", "BadCount", "feature rows do not match point counts");
    if (src_features.dims != dst_features.dims)
        throw Error("registration", "BadCount", "feature dimensions differ");
    if (src_points.size() < 3 || dst_points.size() < 3)
        throw Error("registration", "BadCount", "need at least 3 points per side");
    if (config.iterations < 1 || config.sample_size != 3)
        throw Error("registration", "BadCount", "unsupported RANSAC configuration");

    const std::vector<std::size_t> fwd = best_rows(src_features, dst_features);
    const std::vector<std::size_t> rev = best_rows(dst_features, src_features);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t s = 0; s < fwd.size(); ++s)
        if (rev[fwd[s]] == s) pairs.emplace_back(s, fwd[s]);
    if (pairs.size() < 3)
        throw Error("registration", "RegistrationFailed",
                    "only " + std::to_string(pairs.size()) + " mutual correspondences");

    Point3 lo = dst_points.front(), hi = dst_points.front();
    for (const Point3& p : dst_points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const double diag = (hi - lo).norm();
    const double thresh = std::max(diag * config.inlier_fraction_of_diagonal, 1e-12);
    const double thresh2 = thresh * thresh;

    // Hypothesis index triples are drawn up front from a single stream so the
    // result is a pure function of the seed regardless of thread count.
    const std::size_t p_count = pairs.size();
    std::mt19937_64 rng(config.seed);
    std::vector<std::array<std::size_t, 3>> triples(static_cast<std::size_t>(config.iterations));
    for (auto& t : triples) {
        t[0] = static_cast<std::size_t>(rng() % p_count);
        do t[1] = static_cast<std::size_t>(rng() % p_count); while (t[1] == t[0]);
        do t[2] = static_cast<std::size_t>(rng() % p_count); while (t[2] == t[0] || t[2] == t[1]);
    }

    struct Score {
        std::size_t inliers = 0;
        double sq_sum = std::numeric_limits<double>::infinity();
    };
    std::vector<Score> scores(triples.size());
    parallel_for(triples.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t h = begin; h < end; ++h) {
            const auto& t = triples[h];
            std::vector<Point3> s3{src_points[pairs[t[0]].first], src_points[pairs[t[1]].first],
                                   src_points[pairs[t[2]].first]};
            std::vector<Point3> d3{dst_points[pairs[t[0]].second], dst_points[pairs[t[1]].second],
                                   dst_points[pairs[t[2]].second]};
            if (degenerate_triple(s3[0], s3[1], s3[2]) || degenerate_triple(d3[0], d3[1], d3[2]))
                continue;
            const RigidTransform fit = fit_rigid(s3, d3);
            std::size_t inliers = 0;
            double sq = 0.0;
            for (const auto& pr : pairs) {
                const double d2 =
                    squared_distance(fit.apply(src_points[pr.first]), dst_points[pr.second]);
                if (d2 <= thresh2) {
                    ++inliers;
                    sq += d2;
                }
            }
            scores[h] = {inliers, sq};
        }
    });

    std::size_t best_h = triples.size();
    for (std::size_t h = 0; h < triples.size(); ++h) {
        if (scores[h].inliers < 3) continue;
        if (best_h == triples.size() || scores[h].inliers > scores[best_h].inliers ||
            (scores[h].inliers == scores[best_h].inliers && scores[h].sq_sum < scores[best_h].sq_sum))
            best_h = h;
    }
    if (best_h == triples.size())
        throw Error("registration", "RegistrationFailed", "no hypothesis reached 3 inliers");

    // Refit twice on the consensus set.
    const auto& bt = triples[best_h];
    RigidTransform best = fit_rigid({src_points[pairs[bt[0]].first], src_points[pairs[bt[1]].first],
                                     src_points[pairs[bt[2]].first]},
                                    {dst_points[pairs[bt[0]].second], dst_points[pairs[bt[1]].second],
                                     dst_points[pairs[bt[2]].second]});
    std::size_t inliers = 0;
    double sq = 0.0;
    for (int round = 0; round < 2; ++round) {
        std::vector<Point3> s_in, d_in;
        for (const auto& pr : pairs) {
            if (squared_distance(best.apply(src_points[pr.first]), dst_points[pr.second]) <= thresh2) {
                s_in.push_back(src_points[pr.first]);
                d_in.push_back(dst_points[pr.second]);
            }
        }
        if (s_in.size() < 3) break;
        best = fit_rigid(s_in, d_in);
        inliers = 0;
        sq = 0.0;
        for (const auto& pr : pairs) {
            const double d2 =
                squared_distance(best.apply(src_points[pr.first]), dst_points[pr.second]);
            if (d2 <= thresh2) {
                ++inliers;
                sq += d2;
            }
        }
    }

    RegistrationResult result;
    result.transform = best;
    result.correspondences = p_count;
    result.inlier_fraction = static_cast<double>(inliers) / static_cast<double>(p_count);
    result.rms_error = inliers ? std::sqrt(sq / static_cast<double>(inliers)) : 0.0;
    if (result.inlier_fraction < config.min_inlier_fraction)
        throw Error("registration", "RegistrationFailed",
                    "inlier fraction " + std::to_string(result.inlier_fraction) +
                        " below minimum " + std::to_string(config.min_inlier_fraction));
    warn(warnings, "registration: " + std::to_string(inliers) + "/" + std::to_string(p_count) +
                       " correspondences within " + std::to_string(thresh));
    return result;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
    std::vector<Point3> pts(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) pts[i] = t.apply(cloud[i]);
    if (!cloud.has_normals()) return PointCloud(std::move(pts));
    std::vector<Point3> nrm(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) nrm[i] = t.rotate(cloud.normals()[i]);
    return PointCloud(std::move(pts), std::move(nrm));
}

}  // namespace ismp
