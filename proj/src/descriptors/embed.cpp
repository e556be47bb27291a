#include "ismp/descriptors/embed.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "ismp/error.hpp"
#include "ismp/parallel.hpp"

namespace ismp {

FeatureMatrix patch_embed(const PointCloud& cloud, const std::vector<Patch>& patches) {
    if (patches.empty()) throw Error("descriptors", "BadCount", "no patches to embed");
    for (const Patch& patch : patches) {
        if (patch.member_indices.empty())
            throw Error("descriptors", "BadCount", "patch with no members");
        for (std::size_t idx : patch.member_indices)
            if (idx >= cloud.size())
                throw Error("descriptors", "BadCount", "patch member index out of range");
    }

    FeatureMatrix out(patches.size(), kPatchEmbedDims);
    out.row_meaning = RowMeaning::PerPatch;
    out.provenance = Provenance::PatchEmbed;

    parallel_for(patches.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t pi = begin; pi < end; ++pi) {
            const Patch& patch = patches[pi];
            const std::size_t m = patch.member_indices.size();
            const double inv_m = 1.0 / static_cast<double>(m);
            const Point3 center = cloud[patch.center_index];
            double* row = out.row(pi);

            Point3 centroid{0, 0, 0};
            for (std::size_t idx : patch.member_indices) centroid += cloud[idx];
            centroid = centroid * inv_m;

            Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
            for (std::size_t idx : patch.member_indices) {
                const Point3 d = cloud[idx] - centroid;
                cov(0, 0) += d.x * d.x;
                cov(0, 1) += d.x * d.y;
                cov(0, 2) += d.x * d.z;
                cov(1, 1) += d.y * d.y;
                cov(1, 2) += d.y * d.z;
                cov(2, 2) += d.z * d.z;
            }
            cov(1, 0) = cov(0, 1);
            cov(2, 0) = cov(0, 2);
            cov(2, 1) = cov(1, 2);
            cov *= inv_m;

            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
            // Eigen sorts ascending; flip to descending and clamp round-off
            // negatives.
            double lam[3];
            Eigen::Vector3d evec[3];
            for (int j = 0; j < 3; ++j) {
                lam[j] = std::max(eig.eigenvalues()(2 - j), 0.0);
                evec[j] = eig.eigenvectors().col(2 - j);
            }
            row[0] = lam[0];
            row[1] = lam[1];
            row[2] = lam[2];

            if (lam[0] > 0.0) {
                row[3] = (lam[0] - lam[1]) / lam[0];
                row[4] = (lam[1] - lam[2]) / lam[0];
                row[5] = lam[2] / lam[0];
                row[6] = std::cbrt(lam[0] * lam[1] * lam[2]);
                row[7] = (lam[0] - lam[2]) / lam[0];
                const double total = lam[0] + lam[1] + lam[2];
                double entropy = 0.0;
                for (int j = 0; j < 3; ++j) {
                    const double e = lam[j] / total;
                    if (e > 0.0) entropy -= e * std::log(e);
                }
                row[8] = entropy;
            }

            // Offset split into magnitude / normal component / tangential
            // component.  Individual tangent eigenvectors are ill-conditioned
            // when the two large eigenvalues nearly tie, so only the stable
            // normal direction is projected onto directly.
            const double r = patch.radius;
            const Point3 offset = centroid - center;
            const double off_norm =
                offset.x * evec[2](0) + offset.y * evec[2](1) + offset.z * evec[2](2);
            const double off_sq = offset.dot(offset);
            const double off_tan = std::sqrt(std::max(0.0, off_sq - off_norm * off_norm));
            row[9] = r > 0.0 ? std::sqrt(off_sq) / r : 0.0;
            row[10] = r > 0.0 ? std::abs(off_norm) / r : 0.0;
            row[11] = r > 0.0 ? off_tan / r : 0.0;

            row[12] = patch.k_cap > 0
                          ? static_cast<double>(m) / static_cast<double>(patch.k_cap)
                          : 1.0;

            // Depth profile along the patch normal (smallest-eigenvalue
            // direction); |m3| because the eigenvector sign is arbitrary.
            double m2 = 0.0, m3 = 0.0;
            for (std::size_t idx : patch.member_indices) {
                const Point3 d = cloud[idx] - centroid;
                const double depth = d.x * evec[2](0) + d.y * evec[2](1) + d.z * evec[2](2);
                m2 += depth * depth;
                m3 += depth * depth * depth;
            }
            m2 *= inv_m;
            m3 *= inv_m;
            row[13] = r > 0.0 ? m2 / (r * r) : 0.0;
            row[14] = r > 0.0 ? std::abs(m3) / (r * r * r) : 0.0;

            for (std::size_t idx : patch.member_indices) {
                std::size_t bin = 0;
                if (r > 0.0) {
                    const double t = 9.0 * distance(cloud[idx], center) / r;
                    bin = std::min<std::size_t>(8, static_cast<std::size_t>(std::floor(t)));
                }
                row[15 + bin] += inv_m;
            }
        }
    });
    return out;
}

}  // namespace ismp
