#include "ismp/filtering/filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ismp/geometry/cloud_io.hpp"
#include "ismp/kernels/kernels.hpp"
#include "ismp/parallel.hpp"

namespace ismp {

namespace {

void check_params(const FilterParams& p) {
    const bool ok = std::isfinite(p.alpha) && p.alpha >= 0.0 && std::isfinite(p.beta) &&
                    p.beta >= 0.0 && std::isfinite(p.gamma) && p.gamma >= 0.0;
    if (!ok)
        throw Error("filtering", "BadParams", "alpha, beta, gamma must be finite and nonnegative");
}

double matrix_max(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    return m;
}

}  // namespace

FeatureMatrix filter(const FeatureMatrix& x, const FilterParams& params, Warnings* warnings) {
    check_params(params);
    const std::size_t n = x.rows;
    const std::size_t d = x.dims;
    if (n < 2)
        throw Error("filtering", "TooFewRows",
                    "need at least 2 rows, got " + std::to_string(n));

    // Pairwise row distances; symmetric, zero diagonal.
    std::vector<double> m(n * n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                m[i * n + j] = kernels::dist(x.row(i), x.row(j), d);
            }
    });

    // Weighted adjacency (diagonal excluded) and its degrees.
    std::vector<double> w(n * n, 0.0);
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double wij = std::exp(-params.beta * m[i * n + j]);
            w[i * n + j] = wij;
            sum += wij;
        }
        if (sum <= 0.0)
            throw Error("filtering", "DegenerateWeights",
                        "row " + std::to_string(i) + " of the weighted graph has zero degree");
        degree[i] = sum;
    }

    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

    // L = I - D^{-1/2} A' D^{-1/2} + gamma * diag(E); E = off-diagonal row
    // mean of the distance matrix.
    std::vector<double> lap(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double off_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            lap[i * n + j] = -inv_sqrt[i] * inv_sqrt[j] * w[i * n + j];
            off_sum += m[i * n + j];
        }
        const double e_i = off_sum / static_cast<double>(n - 1);
        lap[i * n + i] = 1.0 + params.gamma * e_i;
    }

    // X_pre = X + alpha * (L X); fixed summation order keeps this
    // bit-reproducible across thread counts.
    FeatureMatrix out(n, d);
    out.row_meaning = x.row_meaning;
    out.provenance = Provenance::Filtered;
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* dst = out.row(i);
            for (std::size_t c = 0; c < d; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += lap[i * n + j] * x.at(j, c);
                dst[c] = x.at(i, c) + params.alpha * acc;
            }
        }
    });

    const double max_in = matrix_max(x.values);
    const double max_pre = matrix_max(out.values);
    if (max_in <= 0.0 || max_pre <= 0.0) {
        warn(warnings, "filtering: nonpositive matrix max, rescale skipped");
        return out;
    }
    const double factor = max_in / max_pre;
    for (double& v : out.values) v *= factor;
    return out;
}

namespace {

void mean_var(const std::vector<double>& v, double* mean, double* var) {
    double sum = 0.0;
    for (double x : v) sum += x;
    *mean = sum / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - *mean) * (x - *mean);
    *var = acc / static_cast<double>(v.size());
}

}  // namespace

std::vector<SweepRow> filter_sweep(const FeatureMatrix& x, const std::vector<double>& alphas,
                                   const std::vector<double>& betas,
                                   const std::vector<double>& gammas, Warnings* warnings) {
    if (alphas.empty() || betas.empty() || gammas.empty())
        throw Error("filtering", "BadParams", "parameter grids must be non-empty");
    double base_mean, base_var;
    mean_var(x.values, &base_mean, &base_var);
    std::vector<SweepRow> rows;
    rows.reserve(alphas.size() * betas.size() * gammas.size());
    for (double a : alphas)
        for (double b : betas)
            for (double g : gammas) {
                const FeatureMatrix enhanced = filter(x, {a, b, g}, warnings);
                double mean, var;
                mean_var(enhanced.values, &mean, &var);
                rows.push_back({a, b, g, std::abs(mean - base_mean), std::abs(var - base_var)});
            }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "alpha,beta,gamma,mean_delta,var_delta\n";
    for (const SweepRow& r : rows)
        out << format_value(r.alpha) << ',' << format_value(r.beta) << ',' << format_value(r.gamma)
            << ',' << format_value(r.mean_delta) << ',' << format_value(r.var_delta) << '\n';
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("filtering", "IoError", "cannot open for writing: " + path);
    write_sweep_csv(rows, out);
    if (!out) throw Error("filtering", "IoError", "write failed: " + path);
}

}  // namespace ismp
