#include "ismp/bank/bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ismp/geometry/cloud_io.hpp"
#include "ismp/geometry/kdtree.hpp"
#include "ismp/geometry/sampling.hpp"
#include "ismp/kernels/kernels.hpp"
#include "ismp/parallel.hpp"

namespace ismp {

using kernels::ops;

namespace {

// 1 - exp(d1)/sum exp(d_j) over the three nearest distances, evaluated in the
// overflow-safe shifted form; equals exactly 2/3 when d1 = d2 = d3.
double reweight_factor(double d1, double d2, double d3) {
    return 1.0 - 1.0 / (1.0 + std::exp(d2 - d1) + std::exp(d3 - d1));
}

struct Top3 {
    double d2[3] = {std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
    std::size_t idx[3] = {0, 0, 0};

    void offer(double dist2, std::size_t index) {
        for (int s = 0; s < 3; ++s) {
            if (dist2 < d2[s] || (dist2 == d2[s] && index < idx[s])) {
                for (int t = 2; t > s; --t) {
                    d2[t] = d2[t - 1];
                    idx[t] = idx[t - 1];
                }
                d2[s] = dist2;
                idx[s] = index;
                return;
            }
        }
    }
};

double population_std(const std::vector<double>& v, double mean) {
    if (v.empty()) return 1.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    double sd = std::sqrt(acc / static_cast<double>(v.size()));
    return sd < 1e-12 ? 1.0 : sd;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

CoordScores coord_score_points(const std::vector<Point3>& test_points,
                               const std::vector<Point3>& bank_points, Warnings* warnings) {
    if (bank_points.empty())
        throw Error("bank", "BankTooSmall", "coordinate bank is empty");
    const bool fallback = bank_points.size() < 3;
    if (fallback)
        warn(warnings, "bank: coordinate bank has " + std::to_string(bank_points.size()) +
                           " points, reweighting disabled");
    const NeighborIndex index(bank_points);
    const std::size_t k = std::min<std::size_t>(3, bank_points.size());
    CoordScores scores;
    scores.nearest.resize(test_points.size());
    scores.reweighted.resize(test_points.size());
    parallel_for(test_points.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::vector<Neighbor> nn = index.knn(test_points[i], k);
            const double d1 = std::sqrt(nn[0].sqdist);
            scores.nearest[i] = d1;
            if (fallback) {
                scores.reweighted[i] = d1;
            } else {
                const double d2 = std::sqrt(nn[1].sqdist);
                const double d3 = std::sqrt(nn[2].sqdist);
                scores.reweighted[i] = reweight_factor(d1, d2, d3) * d1;
            }
        }
    });
    return scores;
}

}  // namespace

std::vector<std::size_t> greedy_coreset(const FeatureMatrix& feats, std::size_t target) {
    if (feats.rows == 0) throw Error("bank", "EmptyTraining", "no rows to select from");
    target = std::max<std::size_t>(1, std::min(target, feats.rows));
    std::vector<std::size_t> selected;
    selected.reserve(target);
    selected.push_back(0);
    if (target == feats.rows) {
        for (std::size_t i = 1; i < feats.rows; ++i) selected.push_back(i);
        return selected;
    }
    std::vector<double> min_d2(feats.rows);
    std::vector<char> taken(feats.rows, 0);
    taken[0] = 1;
    for (std::size_t i = 0; i < feats.rows; ++i)
        min_d2[i] = ops().sqdist(feats.row(i), feats.row(0), feats.dims);
    while (selected.size() < target) {
        std::size_t next = feats.rows;
        double best = 0.0;
        for (std::size_t i = 0; i < feats.rows; ++i) {
            if (taken[i]) continue;
            if (next == feats.rows || min_d2[i] > best) {
                next = i;
                best = min_d2[i];
            }
        }
        selected.push_back(next);
        taken[next] = 1;
        parallel_for(feats.rows, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                if (taken[i]) continue;
                const double d2 = ops().sqdist(feats.row(i), feats.row(next), feats.dims);
                if (d2 < min_d2[i]) min_d2[i] = d2;
            }
        });
    }
    return selected;
}

namespace {

FeatureMatrix stack_rows(const std::vector<BankInput>& train, std::size_t skip) {
    std::size_t rows = 0;
    std::size_t dims = 0;
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (s == skip) continue;
        rows += train[s].features->rows;
        dims = train[s].features->dims;
    }
    FeatureMatrix all(rows, dims);
    all.row_meaning = RowMeaning::PerPatch;
    all.provenance = Provenance::Concat;
    std::size_t at = 0;
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (s == skip) continue;
        const FeatureMatrix& f = *train[s].features;
        std::copy(f.values.begin(), f.values.end(), all.values.begin() + at * dims);
        at += f.rows;
    }
    return all;
}

std::vector<Point3> stack_points(const std::vector<BankInput>& train, std::size_t skip) {
    std::vector<Point3> pts;
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (s == skip) continue;
        const PointCloud& c = *train[s].cloud;
        for (std::size_t i = 0; i < c.size(); ++i) pts.push_back(c[i]);
    }
    return pts;
}

const std::size_t kNoSkip = static_cast<std::size_t>(-1);

}  // namespace

MemoryBank build_bank(const std::vector<BankInput>& train, double coreset_fraction,
                      std::size_t coord_count, Warnings* warnings) {
    if (train.empty()) throw Error("bank", "EmptyTraining", "no training samples");
    if (!(coreset_fraction > 0.0 && coreset_fraction <= 1.0))
        throw Error("bank", "BadParams", "coreset_fraction must lie in (0, 1]");
    if (coord_count == 0) throw Error("bank", "BadParams", "coord_count must be positive");
    const std::size_t dims = train.front().features->dims;
    for (const BankInput& in : train) {
        if (in.cloud == nullptr || in.features == nullptr)
            throw Error("bank", "EmptyTraining", "null training sample");
        if (in.features->rows == 0)
            throw Error("bank", "EmptyTraining", "training sample with no feature rows");
        if (in.features->dims != dims)
            throw Error("bank", "ShapeMismatch", "training samples disagree on feature dims");
    }

    MemoryBank bank;
    FeatureMatrix all = stack_rows(train, kNoSkip);
    const std::size_t target = std::min<std::size_t>(
        all.rows,
        static_cast<std::size_t>(std::ceil(coreset_fraction * static_cast<double>(all.rows))));
    if (target < all.rows) {
        std::vector<std::size_t> keep = greedy_coreset(all, target);
        std::sort(keep.begin(), keep.end());
        FeatureMatrix reduced(keep.size(), dims);
        reduced.row_meaning = all.row_meaning;
        reduced.provenance = all.provenance;
        for (std::size_t r = 0; r < keep.size(); ++r) {
            const double* src = all.row(keep[r]);
            std::copy(src, src + dims, reduced.row(r));
        }
        bank.feature_bank = std::move(reduced);
    } else {
        bank.feature_bank = std::move(all);
    }

    std::vector<Point3> union_points = stack_points(train, kNoSkip);
    const std::size_t coords = std::min(coord_count, union_points.size());
    std::vector<std::size_t> picked = farthest_point_sample(union_points, coords, 0);
    bank.coordinate_bank.reserve(picked.size());
    for (std::size_t i : picked) bank.coordinate_bank.push_back(union_points[i]);

    // Leave-one-out calibration; a single sample is scored against its own
    // bank and flagged, since held-out statistics are impossible.
    std::vector<double> feat_scores, coord_scores;
    if (train.size() == 1) {
        bank.calibration.single_sample = true;
        warn(warnings, "bank: single training sample, calibration uses self-scoring");
        const NnScores f = nn_score(*train[0].features, bank.feature_bank, warnings);
        feat_scores = f.reweighted;
        std::vector<Point3> pts;
        const PointCloud& c = *train[0].cloud;
        for (std::size_t i = 0; i < c.size(); ++i) pts.push_back(c[i]);
        coord_scores = coord_score_points(pts, bank.coordinate_bank, warnings).reweighted;
    } else {
        for (std::size_t held = 0; held < train.size(); ++held) {
            const FeatureMatrix others = stack_rows(train, held);
            const NnScores f = nn_score(*train[held].features, others, warnings);
            feat_scores.insert(feat_scores.end(), f.reweighted.begin(), f.reweighted.end());
            std::vector<Point3> other_pts = stack_points(train, held);
            const std::size_t held_coords = std::min(coord_count, other_pts.size());
            std::vector<std::size_t> sel = farthest_point_sample(other_pts, held_coords, 0);
            std::vector<Point3> held_bank;
            held_bank.reserve(sel.size());
            for (std::size_t i : sel) held_bank.push_back(other_pts[i]);
            std::vector<Point3> pts;
            const PointCloud& c = *train[held].cloud;
            for (std::size_t i = 0; i < c.size(); ++i) pts.push_back(c[i]);
            const CoordScores sc = coord_score_points(pts, held_bank, warnings);
            coord_scores.insert(coord_scores.end(), sc.reweighted.begin(), sc.reweighted.end());
        }
    }
    bank.calibration.feat_mean = mean_of(feat_scores);
    bank.calibration.feat_std = population_std(feat_scores, bank.calibration.feat_mean);
    bank.calibration.coord_mean = mean_of(coord_scores);
    bank.calibration.coord_std = population_std(coord_scores, bank.calibration.coord_mean);
    return bank;
}

NnScores nn_score(const FeatureMatrix& test_feats, const FeatureMatrix& bank_feats,
                  Warnings* warnings) {
    if (bank_feats.rows == 0) throw Error("bank", "BankTooSmall", "feature bank is empty");
    if (test_feats.dims != bank_feats.dims)
        throw Error("bank", "ShapeMismatch",
                    "test dims " + std::to_string(test_feats.dims) + " vs bank dims " +
                        std::to_string(bank_feats.dims));
    const bool fallback = bank_feats.rows < 3;
    if (fallback)
        warn(warnings, "bank: feature bank has " + std::to_string(bank_feats.rows) +
                           " rows, reweighting disabled");
    NnScores scores;
    scores.nearest.resize(test_feats.rows);
    scores.reweighted.resize(test_feats.rows);
    parallel_for(test_feats.rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            Top3 top;
            for (std::size_t b = 0; b < bank_feats.rows; ++b)
                top.offer(ops().sqdist(test_feats.row(r), bank_feats.row(b), test_feats.dims), b);
            const double d1 = std::sqrt(top.d2[0]);
            scores.nearest[r] = d1;
            if (fallback) {
                scores.reweighted[r] = d1;
            } else {
                const double d2 = std::sqrt(top.d2[1]);
                const double d3 = std::sqrt(top.d2[2]);
                scores.reweighted[r] = reweight_factor(d1, d2, d3) * d1;
            }
        }
    });
    for (std::size_t r = 0; r < test_feats.rows; ++r)
        if (scores.nearest[r] > scores.nearest[scores.argmax_row]) scores.argmax_row = r;
    return scores;
}

CoordScores coord_score(const PointCloud& test_cloud, const MemoryBank& bank,
                        Warnings* warnings) {
    std::vector<Point3> pts;
    pts.reserve(test_cloud.size());
    for (std::size_t i = 0; i < test_cloud.size(); ++i) pts.push_back(test_cloud[i]);
    return coord_score_points(pts, bank.coordinate_bank, warnings);
}

AnomalyResult combine_scores(const std::vector<double>& s_feat,
                             const std::vector<double>& s_coord, ScoreMode mode,
                             const Calibration* calibration) {
    if (s_feat.size() != s_coord.size())
        throw Error("bank", "LengthMismatch",
                    "channel lengths differ: " + std::to_string(s_feat.size()) + " vs " +
                        std::to_string(s_coord.size()));
    if (mode == ScoreMode::Calibrated && calibration == nullptr)
        throw Error("bank", "CalibrationMissing", "calibrated mode needs bank calibration");

    AnomalyResult result;
    result.channel_feat = s_feat;
    result.channel_coord = s_coord;
    result.point_scores.resize(s_feat.size());
    for (std::size_t i = 0; i < s_feat.size(); ++i) {
        double f = s_feat[i];
        double c = s_coord[i];
        if (mode == ScoreMode::Calibrated) {
            f = std::max(0.0, (f - calibration->feat_mean) / calibration->feat_std);
            c = std::max(0.0, (c - calibration->coord_mean) / calibration->coord_std);
        }
        result.point_scores[i] = (f + c) / 2.0;
        result.object_score = std::max(result.object_score, result.point_scores[i]);
    }
    if (!result.point_scores.empty()) {
        const double mu = mean_of(result.point_scores);
        double acc = 0.0;
        for (double s : result.point_scores) acc += (s - mu) * (s - mu);
        const double sd = std::sqrt(acc / static_cast<double>(result.point_scores.size()));
        std::size_t flagged = 0;
        for (double s : result.point_scores)
            if (s > mu + 3.0 * sd) ++flagged;
        result.flagged_fraction =
            static_cast<double>(flagged) / static_cast<double>(result.point_scores.size());
    }
    return result;
}

void write_bank(const MemoryBank& bank, std::ostream& out) {
    out << "ISMP-BANK v1\n";
    write_feature_matrix(bank.feature_bank, out);
    out << "coords " << bank.coordinate_bank.size() << '\n';
    for (const Point3& p : bank.coordinate_bank)
        out << format_value(p.x) << ' ' << format_value(p.y) << ' ' << format_value(p.z) << '\n';
    out << "calib_feat_mean=" << format_value(bank.calibration.feat_mean) << '\n';
    out << "calib_feat_std=" << format_value(bank.calibration.feat_std) << '\n';
    out << "calib_coord_mean=" << format_value(bank.calibration.coord_mean) << '\n';
    out << "calib_coord_std=" << format_value(bank.calibration.coord_std) << '\n';
    out << "calib_single_sample=" << (bank.calibration.single_sample ? 1 : 0) << '\n';
    out << "category=" << bank.meta.category << '\n';
    out << "config_digest=" << bank.meta.config_digest << '\n';
}

void save_bank(const MemoryBank& bank, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("bank", "IoError", "cannot open for writing: " + path);
    write_bank(bank, out);
    if (!out) throw Error("bank", "IoError", "write failed: " + path);
}

namespace {

double parse_double_field(const std::string& value, const std::string& key,
                          const std::string& path) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || !std::isfinite(v))
        throw Error("bank", "FormatError", path + ": bad value for " + key);
    return v;
}

}  // namespace

MemoryBank load_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("bank", "FormatError", "cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("bank", "FormatError", path + ": empty file");
    if (line.rfind("ISMP-BANK", 0) != 0)
        throw Error("bank", "FormatError", path + ": not a bank file");
    if (line != "ISMP-BANK v1")
        throw Error("bank", "VersionMismatch", path + ": unsupported version '" + line + "'");

    MemoryBank bank;
    bank.feature_bank = read_feature_matrix(in, path);
    if (!std::getline(in, line))
        throw Error("bank", "FormatError", path + ": missing coords section");
    std::istringstream coords_header(line);
    std::string tag;
    long long count = -1;
    coords_header >> tag >> count;
    if (tag != "coords" || count < 0)
        throw Error("bank", "FormatError", path + ": bad coords header '" + line + "'");
    bank.coordinate_bank.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        if (!std::getline(in, line))
            throw Error("bank", "FormatError", path + ": truncated coordinate block");
        std::istringstream row(line);
        Point3 p;
        if (!(row >> p.x >> p.y >> p.z))
            throw Error("bank", "FormatError", path + ": bad coordinate line '" + line + "'");
        std::string extra;
        if (row >> extra)
            throw Error("bank", "FormatError", path + ": trailing tokens in coordinate line");
        bank.coordinate_bank.push_back(p);
    }

    bool have_feat_mean = false, have_feat_std = false, have_coord_mean = false,
         have_coord_std = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("bank", "FormatError", path + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "calib_feat_mean") {
            bank.calibration.feat_mean = parse_double_field(value, key, path);
            have_feat_mean = true;
        } else if (key == "calib_feat_std") {
            bank.calibration.feat_std = parse_double_field(value, key, path);
            have_feat_std = true;
        } else if (key == "calib_coord_mean") {
            bank.calibration.coord_mean = parse_double_field(value, key, path);
            have_coord_mean = true;
        } else if (key == "calib_coord_std") {
            bank.calibration.coord_std = parse_double_field(value, key, path);
            have_coord_std = true;
        } else if (key == "calib_single_sample") {
            bank.calibration.single_sample = value == "1";
        } else if (key == "category") {
            bank.meta.category = value;
        } else if (key == "config_digest") {
            bank.meta.config_digest = value;
        } else {
            throw Error("bank", "FormatError", path + ": unknown key '" + key + "'");
        }
    }
    if (!(have_feat_mean && have_feat_std && have_coord_mean && have_coord_std))
        throw Error("bank", "FormatError", path + ": calibration block incomplete");
    if (bank.feature_bank.rows == 0 || bank.coordinate_bank.empty())
        throw Error("bank", "FormatError", path + ": bank must contain features and coordinates");
    return bank;
}

}  // namespace ismp
