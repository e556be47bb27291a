#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ismp/error.hpp"
#include "ismp/features/matrix.hpp"

namespace ismp {

struct FilterParams {
    double alpha = 0.2;  // Laplacian influence
    double beta = 0.2;   // similarity decay
    double gamma = 0.001;  // anomaly-metric weight
};

// Similarity-weighted graph Laplacian enhancement over the rows of X:
//   A  = complete graph; W = exp(-beta * row-distance matrix); A' = A .* W
//   L  = I - D^{-1/2} A' D^{-1/2} + gamma * diag(row-mean of off-diag dists)
//   out = (X + alpha * L X) rescaled so max(out) == max(X)
// The rescale is skipped (with a warning) when either max is nonpositive.
FeatureMatrix filter(const FeatureMatrix& x, const FilterParams& params,
                     Warnings* warnings = nullptr);

struct SweepRow {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double mean_delta = 0.0;
    double var_delta = 0.0;
};

// Runs filter() over the cartesian grid (alpha outermost, gamma innermost)
// and reports |mean(out) - mean(X)| and |var(out) - var(X)| per combination.
std::vector<SweepRow> filter_sweep(const FeatureMatrix& x, const std::vector<double>& alphas,
                                   const std::vector<double>& betas,
                                   const std::vector<double>& gammas,
                                   Warnings* warnings = nullptr);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace ismp
