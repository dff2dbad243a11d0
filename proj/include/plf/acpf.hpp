#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <vector>

#include "plf/case.hpp"

namespace plf {

struct AdmittanceMatrix {
    int n = 0;
    Eigen::SparseMatrix<std::complex<double>> Y;
};

/// Standard pi-model assembly with off-nominal taps and phase shift; bus
/// shunts on the diagonal. Throws ZeroImpedanceBranch for an in-service
/// branch with r = x = 0.
AdmittanceMatrix build_ybus(const PowerSystemCase& sys);

enum class StartMode { flat, from_case };

struct PowerFlowOptions {
    double tol = 1e-8;
    int max_iter = 30;
    bool enforce_q_limits = false;
    StartMode start = StartMode::flat;
};

struct PowerFlowSolution {
    Eigen::VectorXd v_mag;   // p.u.
    Eigen::VectorXd v_ang;   // radians
    Eigen::VectorXd p_inj;   // p.u., per bus
    Eigen::VectorXd q_inj;
    Eigen::VectorXd p_from, q_from, p_to, q_to;  // per branch, p.u.
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0;
    std::vector<double> mismatch_history;  // max-norm per iteration including start
};

/// Full Newton-Raphson on the polar power flow equations. A non-converged
/// solve returns the partial solution flagged converged = false; a singular
/// Jacobian throws SingularJacobian.
PowerFlowSolution solve_newton(const PowerSystemCase& sys, const PowerFlowOptions& opt = {});

struct BranchFlows {
    Eigen::VectorXd p_from, q_from, p_to, q_to;
};

/// From/to complex power per branch, positive out of the named bus into the
/// branch. Out-of-service branches report zero.
BranchFlows compute_branch_flows(const PowerSystemCase& sys, const Eigen::VectorXd& v_mag,
                                 const Eigen::VectorXd& v_ang);

}  // namespace plf
