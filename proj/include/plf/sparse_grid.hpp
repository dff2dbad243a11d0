#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "plf/quadrature.hpp"

namespace plf {

/// Per-dimension importance weights for the anisotropic construction.
/// Smaller gamma means a more important dimension (more nodes).
struct AnisoWeights {
    std::vector<double> gamma;

    static AnisoWeights isotropic(int d) { return AnisoWeights{std::vector<double>(d, 1.0)}; }
    double min() const;
    double sum() const;
    int dim() const { return static_cast<int>(gamma.size()); }
};

enum class GridKind { tensor, isotropic, anisotropic };

const char* grid_kind_name(GridKind kind);
GridKind grid_kind_from_name(const std::string& name);

constexpr int kNoLevelCap = std::numeric_limits<int>::max();

/// Index set X(w,d): all level vectors i >= 1 with
///   sum_n (i_n - 1) * gamma_n <= w * min(gamma),  and i_n <= level_cap.
/// Comparisons use exact integer arithmetic whenever the gamma vector scales
/// to integers (the default policies produce dyadic rationals); otherwise a
/// 1e-12 tolerance band keeps the boundary from flipping on round-off.
std::vector<std::vector<int>> build_index_set_x(int w, const AnisoWeights& gamma,
                                                int level_cap = kNoLevelCap);

/// Selection band Y(w,d) = X(w,d) \ X(w - |gamma|/min(gamma), d):
///   w*min(gamma) - |gamma| < sum_n (i_n - 1)*gamma_n <= w*min(gamma).
std::vector<std::vector<int>> build_index_set(int w, const AnisoWeights& gamma,
                                              int level_cap = kNoLevelCap);

/// Combination coefficient: sum over j in {0,1}^d with i+j in X of (-1)^|j|.
int coefficient(const std::vector<int>& index, int w, const AnisoWeights& gamma,
                int level_cap = kNoLevelCap);

/// Isotropic closed form: (-1)^(N-|i|) * C(d-1, N-|i|) for N-d+1 <= |i| <= N
/// with N = w + d, else 0.
int coefficient_isotropic_closed_form(const std::vector<int>& index, int w);

struct GridTerm {
    std::vector<int> index;     // per-dimension 1-based levels
    int coeff = 0;              // combination coefficient, nonzero
    std::vector<int> node_ids;  // tensor nodes in odometer order -> grid node ids
};

/// Assembled collocation grid: combination-technique terms plus the
/// deduplicated node list with combined quadrature weights.
struct SparseGrid {
    GridKind kind = GridKind::isotropic;
    RuleKind rule_kind = RuleKind::fejer2;
    int w = 0;
    int d = 0;
    AnisoWeights gamma;
    int level_cap = kNoLevelCap;
    std::vector<GridTerm> terms;
    std::vector<std::vector<double>> nodes;      // lexicographically sorted, unique
    std::vector<double> weights;                 // per node, sums to 2^d
    std::map<std::vector<double>, int> node_index;

    int node_count() const { return static_cast<int>(nodes.size()); }
};

/// Build a grid. For kind == tensor, `w` is the per-dimension level and gamma
/// is ignored. For kind == isotropic, gamma must be all-equal (or empty, in
/// which case all-ones is used).
SparseGrid assemble(GridKind kind, RuleKind rule_kind, int w, int d, AnisoWeights gamma = {},
                    int level_cap = kNoLevelCap);

/// Diagnostic high-dimension estimate 2^k d^k / k! of the isotropic node count.
double estimate_node_count(int k, int d);

/// Grid plus per-node model outputs (one row per node, one column per output).
struct Interpolant {
    const SparseGrid* grid = nullptr;
    Eigen::MatrixXd values;
};

/// Combination-technique interpolation weights at z: interpolate(z) equals
/// row(z) . values. Row has one entry per grid node.
Eigen::VectorXd interpolation_row(const SparseGrid& grid, std::span<const double> z);

Eigen::VectorXd interpolate(const Interpolant& interp, std::span<const double> z);

/// Quadrature of the stored values: sum_j weight_j * values_j. Divide by 2^d
/// for the mean under U[-1,1]^d.
Eigen::VectorXd integrate_grid(const Interpolant& interp);

}  // namespace plf
