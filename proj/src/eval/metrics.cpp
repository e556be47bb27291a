#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ismp/eval/eval.hpp"
#include "ismp/geometry/cloud_io.hpp"

namespace ismp {

RocResult auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw Error("eval", "LengthMismatch",
                    "scores/labels lengths differ: " + std::to_string(scores.size()) + " vs " +
                        std::to_string(labels.size()));
    RocResult result;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw Error("eval", "BadLabel", "labels must be 0 or 1");
        if (!std::isfinite(scores[i]))
            throw Error("eval", "BadLabel", "scores must be finite");
        if (labels[i] == 1)
            ++result.positives;
        else
            ++result.negatives;
    }
    if (result.positives == 0 || result.negatives == 0)
        throw Error("eval", "OneClassOnly", "need both classes, got " +
                                                std::to_string(result.positives) + " positive / " +
                                                std::to_string(result.negatives) + " negative");

    // Average ranks with tie groups sharing their mean rank.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });
    std::vector<double> rank(scores.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        // 1-based ranks i+1 .. j+1 share the average (i + j)/2 + 1.
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t s = 0; s < scores.size(); ++s)
        if (labels[s] == 1) rank_sum_pos += rank[s];
    const double p = static_cast<double>(result.positives);
    const double n = static_cast<double>(result.negatives);
    const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
    result.auroc = u / (p * n);
    return result;
}

CategoryEval evaluate_category(const std::vector<const AnomalyResult*>& results,
                               const std::vector<const LabeledSample*>& samples,
                               Warnings* warnings) {
    if (results.size() != samples.size())
        throw Error("eval", "LengthMismatch", "results/samples lengths differ");
    if (results.empty()) throw Error("eval", "LengthMismatch", "nothing to evaluate");

    CategoryEval eval;
    std::vector<double> object_scores;
    std::vector<int> object_labels;
    std::vector<double> point_scores;
    std::vector<int> point_labels;
    for (std::size_t s = 0; s < results.size(); ++s) {
        object_scores.push_back(results[s]->object_score);
        object_labels.push_back(samples[s]->object_anomalous ? 1 : 0);
        if (!samples[s]->has_point_labels()) continue;
        if (samples[s]->point_labels.size() != results[s]->point_scores.size())
            throw Error("eval", "LengthMismatch",
                        "sample " + samples[s]->sample_id + ": " +
                            std::to_string(samples[s]->point_labels.size()) + " labels vs " +
                            std::to_string(results[s]->point_scores.size()) + " scores");
        point_scores.insert(point_scores.end(), results[s]->point_scores.begin(),
                            results[s]->point_scores.end());
        point_labels.insert(point_labels.end(), samples[s]->point_labels.begin(),
                            samples[s]->point_labels.end());
    }

    try {
        eval.object = auroc(object_scores, object_labels);
    } catch (const Error& e) {
        warn(warnings, std::string("eval: O-AUROC unavailable: ") + e.what());
    }
    if (point_scores.empty()) {
        warn(warnings, "eval: P-AUROC unavailable: no point labels in category");
    } else {
        try {
            eval.point = auroc(point_scores, point_labels);
        } catch (const Error& e) {
            warn(warnings, std::string("eval: P-AUROC unavailable: ") + e.what());
        }
    }
    return eval;
}

void write_eval_csv(const std::vector<EvalRow>& rows, std::ostream& out) {
    out << "method,category,o_auroc,p_auroc\n";
    for (const EvalRow& r : rows) {
        out << r.method << ',' << r.category << ',';
        out << (r.o_auroc ? format_value(*r.o_auroc) : "nan") << ',';
        out << (r.p_auroc ? format_value(*r.p_auroc) : "nan") << '\n';
    }
}

void save_eval_csv(const std::vector<EvalRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("eval", "IoError", "cannot open for writing: " + path);
    write_eval_csv(rows, out);
    if (!out) throw Error("eval", "IoError", "write failed: " + path);
}

}  // namespace ismp
