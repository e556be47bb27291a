#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ismp/error.hpp"
#include "ismp/features/matrix.hpp"
#include "ismp/geometry/cloud.hpp"

namespace ismp {

enum class SliceId { P1, P2, P3, P4 };
enum class SliceSubset { Whole, UpperHalf, LowerHalf };
enum class SliceCamera { AboveLookingDown, BelowLookingUp };

const char* slice_name(SliceId id);

struct SliceSpec {
    SliceId id = SliceId::P1;
    SliceSubset subset = SliceSubset::Whole;
    SliceCamera camera = SliceCamera::AboveLookingDown;
    double depth_origin = 0.0;  // reference plane z-value
};

// Orthographic depth raster over the cloud's xy bounding box.  Row 0 is the
// minimum-y edge; unoccupied pixels hold 0 in `depth` and are excluded from
// all statistics.
struct ProjectionSlice {
    SliceSpec spec;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> depth;
    std::vector<unsigned char> occupied;
    double window_min_x = 0.0, window_min_y = 0.0;
    double window_max_x = 0.0, window_max_y = 0.0;

    double depth_at(std::size_t r, std::size_t c) const { return depth[r * cols + c]; }
    bool occupied_at(std::size_t r, std::size_t c) const { return occupied[r * cols + c] != 0; }
};

struct InfoReport {
    double i_top = 0.0;
    double i_global = 0.0;
    double z_mid = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;
};

struct DiscrepancyReport {
    std::vector<std::size_t> upper_indices;  // into the cloud, ascending
    std::vector<double> delta;               // parallel to upper_indices
    double mu = 0.0;                         // over every point's delta
    double sigma = 0.0;
    double k = 3.0;
    std::vector<std::size_t> flagged;  // subset of upper_indices
};

struct SplitResult {
    std::vector<std::size_t> upper;  // z >= z_mid (boundary goes up)
    std::vector<std::size_t> lower;  // z < z_mid
    double z_mid = 0.0;
};

SplitResult split_at_mid(const PointCloud& cloud);

// I_top = sum(z_max - z_i); I_global adds max(0, z_i - z_mid) per point.
InfoReport info_measures(const PointCloud& cloud);

// The four canonical slices: P1 whole/above, P2 upper/below, P3 lower/above,
// P4 whole/below.  The z-buffer keeps the point nearest the camera; a zero xy
// extent collapses that axis to a single row or column (with a warning).
std::array<ProjectionSlice, 4> render_slices(const PointCloud& cloud, std::size_t resolution,
                                             Warnings* warnings = nullptr);

DiscrepancyReport depth_discrepancy(const PointCloud& cloud, double k);

// Raster statistics descriptor: per slice (occupied fraction, depth mean,
// depth std, depth histogram, gradient-magnitude histogram), concatenated.
// dims = |slices| * (3 + 2*bins); one row.
FeatureMatrix global_descriptor(const std::vector<const ProjectionSlice*>& slices,
                                std::size_t bins);
FeatureMatrix global_descriptor(const std::array<ProjectionSlice, 4>& slices, std::size_t bins);

// Z-scores the single global row across its entries, then appends it to every
// local row.
FeatureMatrix fuse_global(const FeatureMatrix& local, const FeatureMatrix& global);

// 8-bit binary PGM; occupied depth min-max normalised into 1..255, unoccupied
// pixels 0.  Rows are written top (max y) first.
void write_pgm(const ProjectionSlice& slice, const std::string& path);

// Key=value sidecar with the raw per-slice statistics.
void write_slice_stats(const ProjectionSlice& slice, const std::string& path);

}  // namespace ismp
