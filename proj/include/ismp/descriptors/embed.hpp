#pragma once

#include <cstddef>
#include <vector>

#include "ismp/descriptors/patches.hpp"
#include "ismp/features/matrix.hpp"

namespace ismp {

inline constexpr std::size_t kPatchEmbedDims = 24;

// Deterministic per-patch shape descriptor standing in for a learned patch
// embedder.  Layout per row:
//   [0..2]   covariance eigenvalues, descending
//   [3..8]   linearity, planarity, sphericity, omnivariance, anisotropy,
//            eigentropy
//   [9..11]  centroid offset / r: magnitude, |normal component|, tangential
//            magnitude (split against the smallest-eigenvalue direction)
//   [12]     member count / k_cap
//   [13..14] 2nd and |3rd| central moment of depth along the patch normal,
//            normalised by r^2 / r^3
//   [15..23] 9-bin radial density histogram (fractions)
// Every entry is invariant under rigid motion and member permutation.
FeatureMatrix patch_embed(const PointCloud& cloud, const std::vector<Patch>& patches);

}  // namespace ismp
