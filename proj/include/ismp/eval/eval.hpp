#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ismp/bank/bank.hpp"
#include "ismp/error.hpp"
#include "ismp/geometry/cloud.hpp"

namespace ismp {

struct LabeledSample {
    PointCloud cloud;
    std::vector<int> point_labels;  // empty when no ground truth is attached
    bool object_anomalous = false;
    std::string sample_id;

    bool has_point_labels() const { return !point_labels.empty(); }
};

struct RocResult {
    double auroc = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

// Rank-statistic AUROC (Mann-Whitney U / (P*N)) with half credit for ties.
// Labels must be 0/1 with both classes present.
RocResult auroc(const std::vector<double>& scores, const std::vector<int>& labels);

struct CategoryEval {
    std::optional<RocResult> object;  // O-AUROC over per-sample object scores
    std::optional<RocResult> point;   // P-AUROC over pooled per-point scores
};

// Object-level AUROC over object scores; point-level AUROC over all points of
// samples that carry ground-truth labels, pooled.  A metric whose inputs are
// one-class comes back empty with a warning instead of failing the other.
CategoryEval evaluate_category(const std::vector<const AnomalyResult*>& results,
                               const std::vector<const LabeledSample*>& samples,
                               Warnings* warnings = nullptr);

struct EvalRow {
    std::string method;
    std::string category;
    std::optional<double> o_auroc;
    std::optional<double> p_auroc;
};

// CSV: method,category,o_auroc,p_auroc (missing metrics emitted as nan).
void write_eval_csv(const std::vector<EvalRow>& rows, std::ostream& out);
void save_eval_csv(const std::vector<EvalRow>& rows, const std::string& path);

struct Dataset {
    std::string category;
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> test;
};

// Loads `<root>/train/*.xyz|ply`, `<root>/test/*.xyz|ply` and optional
// `<root>/gt/*.txt` (one 0/1 per line, filename-stem matched to test files).
// Tests without ground truth fall back to object labels inferred from the
// filename ("good"/"normal" in the stem means normal) with a warning.
Dataset load_dataset(const std::string& root, Warnings* warnings = nullptr);

}  // namespace ismp
