#include "ismp/features/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ismp/error.hpp"
#include "ismp/geometry/cloud_io.hpp"

namespace ismp {

FeatureMatrix::FeatureMatrix(std::size_t r, std::size_t d)
    : rows(r), dims(d), values(r * d, 0.0) {}

void write_feature_matrix(const FeatureMatrix& m, std::ostream& out) {
    out << "ISMP-FM v1 " << m.rows << ' ' << m.dims << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.dims; ++c) {
            if (c) out << ' ';
            out << format_value(row[c]);
        }
        out << '\n';
    }
}

void save_feature_matrix(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("features", "IoError", "cannot open for writing: " + path);
    write_feature_matrix(m, out);
    if (!out) throw Error("features", "IoError", "write failed: " + path);
}

FeatureMatrix read_feature_matrix(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        throw Error("features", "ParseError", origin + ": empty input, expected ISMP-FM header");
    std::istringstream header(line);
    std::string magic, version;
    long long rows = -1, dims = -1;
    header >> magic >> version >> rows >> dims;
    if (magic != "ISMP-FM" || version != "v1" || !header || rows < 0 || dims < 0)
        throw Error("features", "ParseError",
                    origin + ": bad header, expected 'ISMP-FM v1 <rows> <dims>'");
    std::string trailing;
    if (header >> trailing)
        throw Error("features", "ParseError", origin + ": trailing tokens in header");

    FeatureMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(dims));
    for (long long r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
            throw Error("features", "ParseError",
                        origin + ": expected " + std::to_string(rows) + " data rows, got " +
                            std::to_string(r));
        std::istringstream row(line);
        for (long long c = 0; c < dims; ++c) {
            std::string token;
            if (!(row >> token))
                throw Error("features", "ParseError",
                            origin + ":" + std::to_string(r + 2) + ": expected " +
                                std::to_string(dims) + " values");
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size() || !std::isfinite(v))
                throw Error("features", "ParseError",
                            origin + ":" + std::to_string(r + 2) + ": bad value '" + token + "'");
            m.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = v;
        }
        std::string extra;
        if (row >> extra)
            throw Error("features", "ParseError",
                        origin + ":" + std::to_string(r + 2) + ": trailing tokens");
    }
    return m;
}

FeatureMatrix load_feature_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("features", "IoError", "cannot open: " + path);
    return read_feature_matrix(in, path);
}

FeatureMatrix import_embeddings(const std::string& path, std::size_t expected_rows) {
    FeatureMatrix m = load_feature_matrix(path);
    if (m.rows != expected_rows)
        throw Error("features", "ShapeMismatch",
                    path + ": has " + std::to_string(m.rows) + " rows, expected " +
                        std::to_string(expected_rows));
    m.provenance = Provenance::Imported;
    return m;
}

FeatureMatrix zscore_columns(const FeatureMatrix& m) {
    FeatureMatrix out(m.rows, m.dims);
    out.row_meaning = m.row_meaning;
    out.provenance = m.provenance;
    if (m.rows == 0) return out;
    for (std::size_t c = 0; c < m.dims; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) mean += m.at(r, c);
        mean /= static_cast<double>(m.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) {
            const double d = m.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(m.rows);
        double sd = std::sqrt(var);
        if (sd < 1e-12) sd = 1.0;
        for (std::size_t r = 0; r < m.rows; ++r) out.at(r, c) = (m.at(r, c) - mean) / sd;
    }
    return out;
}

FeatureMatrix concat_features(const std::vector<const FeatureMatrix*>& parts) {
    if (parts.empty()) throw Error("features", "RowMismatch", "nothing to concatenate");
    const std::size_t rows = parts.front()->rows;
    std::size_t dims = 0;
    std::vector<FeatureMatrix> standardized;
    standardized.reserve(parts.size());
    for (const FeatureMatrix* p : parts) {
        if (p->rows != rows)
            throw Error("features", "RowMismatch",
                        "row count mismatch: " + std::to_string(p->rows) + " vs " +
                            std::to_string(rows));
        dims += p->dims;
        standardized.push_back(zscore_columns(*p));
    }
    FeatureMatrix out(rows, dims);
    out.row_meaning = parts.front()->row_meaning;
    out.provenance = Provenance::Concat;
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = out.row(r);
        for (const FeatureMatrix& p : standardized) {
            const double* src = p.row(r);
            for (std::size_t c = 0; c < p.dims; ++c) *dst++ = src[c];
        }
    }
    return out;
}

}  // namespace ismp
