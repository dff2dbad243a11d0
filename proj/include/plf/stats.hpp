#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plf/driver.hpp"

namespace plf {

struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    bool single_sample = false;   // n = 1 empirical: stddev 0 by convention
    bool renormalized = false;    // diverged nodes excluded, weights rescaled
};

/// Quadrature moments of a collocation result: mean = sum w_j f_j / W,
/// var = sum w_j f_j^2 / W - mean^2 (clipped at 0), with W the weight sum
/// over converged nodes (2^d when none diverged). Errors: AllNodesDiverged.
Moments moments_quadrature(const PLFResult& result);

/// Sample mean and (n-1)-normalized standard deviation over converged samples.
Moments moments_empirical(const PLFResult& result);

struct Histogram {
    std::vector<double> edges;    // n_bins + 1
    std::vector<double> density;  // n_bins, integrates to 1
};

struct Cdf {
    std::vector<double> values;  // sorted
    std::vector<double> prob;    // (i+1)/n
};

Histogram histogram(std::span<const double> samples, double lo, double hi, int n_bins);
Cdf empirical_cdf(std::vector<double> samples);

/// Draw n xi ~ U[-1,1]^d with per-block seeded substreams and evaluate the
/// interpolant at the selected columns. Row i of the output is sample i;
/// results do not depend on the worker count.
Eigen::MatrixXd sample_interpolant(const SparseGrid& grid, const Eigen::MatrixXd& values,
                                   const std::vector<int>& columns, int n_samples,
                                   std::uint64_t seed, int workers);

/// Bin-wise Kullback-Leibler divergence sum_i p_i ln(p_i / q_i) over bin
/// masses, both floored at 1e-12. Requires identical bin edges.
/// Errors: BinMismatch.
double kld(const Histogram& ref, const Histogram& grid);

struct ErrorMetric {
    double value = 0;      // percent when relative, absolute otherwise
    bool absolute = false; // reference magnitude below the division guard
};

/// eps = |ref - test| / |ref| in percent; falls back to absolute error when
/// |ref| < 1e-9.
ErrorMetric relative_error_pct(double ref, double test);

}  // namespace plf
