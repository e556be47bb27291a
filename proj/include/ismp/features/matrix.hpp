#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ismp {

enum class RowMeaning { PerPatch, PerPoint };
enum class Provenance { Fpfh, PatchEmbed, Concat, Filtered, Imported, Global };

// Dense row-major matrix of per-row feature vectors.  Rows usually correspond
// to patch centers of a point cloud; columns are descriptor dimensions.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t dims = 0;
    std::vector<double> values;  // rows * dims, row-major
    RowMeaning row_meaning = RowMeaning::PerPatch;
    Provenance provenance = Provenance::Imported;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t d);

    double* row(std::size_t r) { return values.data() + r * dims; }
    const double* row(std::size_t r) const { return values.data() + r * dims; }

    double& at(std::size_t r, std::size_t c) { return values[r * dims + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * dims + c]; }

    bool empty() const { return rows == 0 || dims == 0; }
};

// Text format:
//   ISMP-FM v1 <rows> <dims>
//   <dims ascii doubles per line, rows lines>
void save_feature_matrix(const FeatureMatrix& m, const std::string& path);
void write_feature_matrix(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix load_feature_matrix(const std::string& path);
FeatureMatrix read_feature_matrix(std::istream& in, const std::string& origin);

// Loads a feature-matrix file produced elsewhere (e.g. a learned embedder)
// and checks its row count against the patch set it is meant to describe.
FeatureMatrix import_embeddings(const std::string& path, std::size_t expected_rows);

// Per-column standardisation: subtract column mean, divide by column stddev.
// Columns with stddev below 1e-12 divide by 1 instead so constant features
// survive as zeros rather than NaN.
FeatureMatrix zscore_columns(const FeatureMatrix& m);

// Standardises each part with zscore_columns, then concatenates horizontally.
// Every input must have the same row count.
FeatureMatrix concat_features(const std::vector<const FeatureMatrix*>& parts);

}  // namespace ismp
