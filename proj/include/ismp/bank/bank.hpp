#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ismp/error.hpp"
#include "ismp/features/matrix.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/geometry/point3.hpp"

namespace ismp {

enum class ScoreMode { Raw, Calibrated };

// Score statistics gathered during training (leave-one-out), used by the
// calibrated score mode to put the feature and coordinate channels on a
// common scale.
struct Calibration {
    double feat_mean = 0.0;
    double feat_std = 1.0;
    double coord_mean = 0.0;
    double coord_std = 1.0;
    bool single_sample = false;  // calibration came from self-scoring
};

struct BankMeta {
    std::string category = "unknown";
    std::string config_digest;
    int format_version = 1;
};

struct MemoryBank {
    FeatureMatrix feature_bank;           // banked patch feature rows
    std::vector<Point3> coordinate_bank;  // banked training coordinates
    Calibration calibration;
    BankMeta meta;
};

// One registered training sample: its cloud (template frame) and its final
// per-patch feature matrix.  Non-owning.
struct BankInput {
    const PointCloud* cloud = nullptr;
    const FeatureMatrix* features = nullptr;
};

// Greedy maximin row subset (first row seeds the selection; distance ties
// break to the lower row index).
std::vector<std::size_t> greedy_coreset(const FeatureMatrix& feats, std::size_t target);

MemoryBank build_bank(const std::vector<BankInput>& train, double coreset_fraction,
                      std::size_t coord_count, Warnings* warnings = nullptr);

struct NnScores {
    std::vector<double> nearest;     // distance to nearest bank row
    std::vector<double> reweighted;  // nearest scaled by the 3-NN factor
    std::size_t argmax_row = 0;      // test row with the largest nearest distance
};

// Per-test-row nearest-bank distances with the 3-nearest-neighbour
// reweighting factor 1 - exp(d1)/sum_j exp(d_j).  With fewer than 3 bank rows
// the factor falls back to 1 (with a warning).
NnScores nn_score(const FeatureMatrix& test_feats, const FeatureMatrix& bank_feats,
                  Warnings* warnings = nullptr);

struct CoordScores {
    std::vector<double> nearest;
    std::vector<double> reweighted;
};

// Same machinery in coordinate space, one score per test point.
CoordScores coord_score(const PointCloud& test_cloud, const MemoryBank& bank,
                        Warnings* warnings = nullptr);

struct AnomalyResult {
    std::vector<double> point_scores;
    double object_score = 0.0;
    std::vector<double> channel_feat;   // per-point s^F
    std::vector<double> channel_coord;  // per-point s^C
    double flagged_fraction = 0.0;      // scores above mean + 3 std of this sample
};

// s = (s^F + s^C)/2 per point; calibrated mode z-scores each channel by the
// training calibration (clamped at 0) first.  Object score = max point score.
AnomalyResult combine_scores(const std::vector<double>& s_feat,
                             const std::vector<double>& s_coord, ScoreMode mode,
                             const Calibration* calibration = nullptr);

// Text container: magic line `ISMP-BANK v1`, feature rows as an embedded
// feature-matrix block, coordinates, then calibration/meta key=value lines.
void save_bank(const MemoryBank& bank, const std::string& path);
void write_bank(const MemoryBank& bank, std::ostream& out);
MemoryBank load_bank(const std::string& path);

}  // namespace ismp
