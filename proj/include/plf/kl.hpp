#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

#include "plf/uncertainty.hpp"

namespace plf {

/// Truncated discrete Karhunen-Loeve basis of a source group. Maps
/// standardized variables xi in [-1,1]^d to physical injection vectors:
///   value = mean + sum_n sqrt(lambda_n) * phi_n * (sqrt(3) * xi_n).
/// The sqrt(3) factor gives each scaled uniform variable unit variance.
struct KLBasis {
    std::string group_name;
    Eigen::VectorXd mean;          // length m
    Eigen::VectorXd eigenvalues;   // length m, non-increasing, clipped at 0
    Eigen::MatrixXd eigenvectors;  // m x m, orthonormal columns
    int d = 0;                     // truncation order, 1 <= d <= m
    double scale = 1.7320508075688772;  // sqrt(3)

    int full_dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Symmetric eigendecomposition of the group covariance, eigenpairs sorted by
/// descending eigenvalue. Sign convention: the entry of largest magnitude in
/// each eigenvector is positive (ties: lowest index). Small negative
/// eigenvalues (>= -1e-10 * lambda_1) are clipped to zero.
/// Errors: NotSymmetric, IndefiniteBeyondTolerance.
KLBasis decompose(const SourceGroup& group);

/// Smallest d with cumulative eigenvalue fraction >= energy_fraction.
/// A zero spectrum truncates to d = 1.
KLBasis truncate(KLBasis basis, double energy_fraction = 0.90);

/// Errors: XiOutOfRange if any |xi_n| > 1.
Eigen::VectorXd evaluate(const KLBasis& basis, std::span<const double> xi);

/// Cumulative fraction sum_{n<=d} lambda_n / sum_n lambda_n (1.0 for a zero
/// spectrum).
double variance_captured(const KLBasis& basis);

/// Structured-document round trip (exact decimal text).
std::string kl_basis_to_json(const KLBasis& basis);
KLBasis kl_basis_from_json(const std::string& text);

}  // namespace plf
