#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plf/errors.hpp"
#include "plf/kl.hpp"
#include "plf/quadrature.hpp"
#include "plf/rng.hpp"

using namespace plf;

namespace {

SourceGroup group_from_cov(Eigen::MatrixXd cov, Eigen::VectorXd mean) {
    SourceGroup g;
    g.name = "test";
    g.mean = std::move(mean);
    g.covariance = std::move(cov);
    g.sources.resize(g.mean.size());
    return g;
}

// m=25 exponential kernel C(i,j) = exp(-|i-j|/10)
SourceGroup exp_kernel_group() {
    const int m = 25;
    Eigen::MatrixXd c(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) c(i, j) = std::exp(-std::abs(i - j) / 10.0);
    return group_from_cov(c, Eigen::VectorXd::Zero(m));
}

// Cyclic Jacobi rotations, written directly against the definition; shares
// nothing with the Eigen-based implementation path.
Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a) {
    const int n = static_cast<int>(a.rows());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Eigen::VectorXd lam = a.diagonal();
    std::sort(lam.data(), lam.data() + n, std::greater<double>());
    return lam;
}

}  // namespace

TEST_CASE("analytic 2x2 decomposition") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.5, 0.5, 1.0;
    const KLBasis b = decompose(group_from_cov(c, Eigen::Vector2d(0, 0)));
    CHECK(b.eigenvalues[0] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(b.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-14));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(b.eigenvectors(0, 0) == doctest::Approx(s));
    CHECK(b.eigenvectors(1, 0) == doctest::Approx(s));
    // sign rule: largest-magnitude entry positive (tie -> lowest index)
    CHECK(b.eigenvectors(0, 1) == doctest::Approx(s));
    CHECK(b.eigenvectors(1, 1) == doctest::Approx(-s));
}

TEST_CASE("identity covariance: flat spectrum, orthonormal, reconstructs") {
    const KLBasis b = decompose(group_from_cov(Eigen::MatrixXd::Identity(3, 3),
                                               Eigen::Vector3d(1, 2, 3)));
    for (int i = 0; i < 3; ++i) CHECK(b.eigenvalues[i] == doctest::Approx(1.0));
    const Eigen::MatrixXd gram = b.eigenvectors.transpose() * b.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
    const Eigen::MatrixXd rec = b.eigenvectors * b.eigenvalues.asDiagonal() *
                                b.eigenvectors.transpose();
    CHECK((rec - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("exponential kernel spectrum matches the Jacobi oracle") {
    const SourceGroup g = exp_kernel_group();
    const KLBasis b = decompose(g);
    const Eigen::VectorXd oracle = jacobi_eigenvalues(g.covariance);
    for (int i = 0; i < 25; ++i)
        CHECK(b.eigenvalues[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
    // values frozen from an independent dense eigensolver
    CHECK(b.eigenvalues[0] == doctest::Approx(12.8870996934174).epsilon(1e-10));
    CHECK(b.eigenvalues[1] == doctest::Approx(5.22986419404141).epsilon(1e-10));
    CHECK(b.eigenvalues[2] == doctest::Approx(2.29789555913988).epsilon(1e-10));
    CHECK(b.eigenvalues[4] == doctest::Approx(0.736609622605769).epsilon(1e-10));
}

TEST_CASE("orthonormal columns within 1e-10") {
    const KLBasis b = decompose(exp_kernel_group());
    const Eigen::MatrixXd gram = b.eigenvectors.transpose() * b.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(25, 25)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("truncation arithmetic") {
    KLBasis b;
    b.eigenvalues.resize(3);
    b.eigenvalues << 8, 1, 1;
    b.eigenvectors = Eigen::MatrixXd::Identity(3, 3);
    b.mean = Eigen::Vector3d::Zero();
    b.d = 3;
    CHECK(truncate(b, 0.9).d == 2);
    b.eigenvalues << 10, 0, 0;
    CHECK(truncate(b, 0.9).d == 1);
    b.d = 1;
    CHECK(variance_captured(truncate(b, 0.9)) == doctest::Approx(1.0));
    b.eigenvalues << 8, 1, 1;
    b.d = 1;
    CHECK(variance_captured(b) == doctest::Approx(0.8));
    b.d = 3;
    CHECK(variance_captured(b) == doctest::Approx(1.0));
}

TEST_CASE("zero spectrum truncates to d = 1") {
    const KLBasis b =
        truncate(decompose(group_from_cov(Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4))));
    CHECK(b.d == 1);
    CHECK(variance_captured(b) == 1.0);
}

TEST_CASE("exponential kernel truncation at 0.90 matches the cumulative oracle") {
    const KLBasis b = truncate(decompose(exp_kernel_group()), 0.90);
    CHECK(b.d == 6);  // frozen cumulative-sum answer
    CHECK(variance_captured(b) == doctest::Approx(0.914305782337854).epsilon(1e-10));
    CHECK(variance_captured(b) >= 0.90);
    CHECK(b.d < 25);
}

TEST_CASE("reconstruction error matches the tail eigenvalue bound") {
    const KLBasis full = decompose(exp_kernel_group());
    for (int d : {3, 6, 12, 25}) {
        const Eigen::MatrixXd rec = full.eigenvectors.leftCols(d) *
                                    full.eigenvalues.head(d).asDiagonal() *
                                    full.eigenvectors.leftCols(d).transpose();
        const double err = (exp_kernel_group().covariance - rec).norm();
        const double bound = std::sqrt(full.eigenvalues.tail(25 - d).squaredNorm());
        CHECK(std::abs(err - bound) <= 1e-8);
    }
}

TEST_CASE("evaluate: mean at xi = 0, single-term arithmetic, range check") {
    KLBasis b;
    b.eigenvalues.resize(2);
    b.eigenvalues << 4, 1;
    b.eigenvectors = Eigen::MatrixXd::Identity(2, 2);
    b.mean = Eigen::Vector2d(10, 20);
    b.d = 1;
    const std::vector<double> zero = {0.0};
    const Eigen::VectorXd at_zero = evaluate(b, zero);
    CHECK(at_zero[0] == 10.0);
    CHECK(at_zero[1] == 20.0);
    const std::vector<double> one = {1.0};
    const Eigen::VectorXd at_one = evaluate(b, one);
    CHECK(at_one[0] == doctest::Approx(10 + 2 * std::sqrt(3.0)).epsilon(1e-14));
    const std::vector<double> bad = {1.5};
    CHECK_THROWS_AS(evaluate(b, bad), Error);
    const std::vector<double> wrong_len = {0.5, 0.5};
    CHECK_THROWS_AS(evaluate(b, wrong_len), Error);
}

TEST_CASE("monte carlo over xi reproduces the group covariance") {
    const SourceGroup g = exp_kernel_group();
    KLBasis b = decompose(g);  // full d = m
    Rng rng(2024);
    const int n = 200000;
    const int m = 25;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> xi(m);
    for (int t = 0; t < n; ++t) {
        for (int k = 0; k < m; ++k) xi[k] = rng.uniform_sym();
        const Eigen::VectorXd y = evaluate(b, xi);
        mean += y;
        second += y * y.transpose();
    }
    mean /= n;
    const Eigen::MatrixXd cov = second / n - mean * mean.transpose();
    for (int i = 0; i < m; ++i)
        CHECK(cov(i, i) == doctest::Approx(g.covariance(i, i)).epsilon(0.02));
}

TEST_CASE("uncorrelatedness under the tensor quadrature rule") {
    // E[(sqrt3 xi_n)(sqrt3 xi_k)] over a level-3 tensor rule = 0 for n != k
    const Rule1D& r = rule(RuleKind::clenshaw_curtis, 3);
    double acc = 0;
    for (int a = 0; a < r.order; ++a)
        for (int b = 0; b < r.order; ++b)
            acc += r.weights[a] * r.weights[b] * (3.0 * r.nodes[a] * r.nodes[b]);
    CHECK(std::abs(acc / 4.0) <= 1e-12);
    // and unit variance on the diagonal
    double var = 0;
    for (int a = 0; a < r.order; ++a) var += r.weights[a] * 3.0 * r.nodes[a] * r.nodes[a];
    CHECK(var / 2.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadrature mean identity: evaluate integrates back to the mean") {
    KLBasis b = truncate(decompose(exp_kernel_group()), 0.9);
    b.mean = Eigen::VectorXd::LinSpaced(25, 1.0, 3.0);
    const Rule1D& r = rule(RuleKind::fejer2, 3);
    // integrate over the first dimension only (others at 0) - linearity makes
    // each odd term vanish dimension by dimension
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(25);
    std::vector<double> xi(b.d, 0.0);
    for (int a = 0; a < r.order; ++a) {
        xi[0] = r.nodes[a];
        acc += r.weights[a] * evaluate(b, xi);
    }
    CHECK((acc / 2.0 - b.mean).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rejects asymmetric and indefinite inputs") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.2, 0.3, 1.0;
    CHECK_THROWS_AS(decompose(group_from_cov(c, Eigen::Vector2d(0, 0))), Error);
    c << 1.0, 0.0, 0.0, -0.5;
    try {
        decompose(group_from_cov(c, Eigen::Vector2d(0, 0)));
        FAIL("expected IndefiniteBeyondTolerance");
    } catch (const Error& e) {
        CHECK(e.code() == "IndefiniteBeyondTolerance");
    }
}

TEST_CASE("clips tiny negative eigenvalues to zero") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 1.0, 1.0, 1.0 - 1e-12;
    const KLBasis b = decompose(group_from_cov(c, Eigen::Vector2d(0, 0)));
    CHECK(b.eigenvalues[1] >= 0.0);
}

TEST_CASE("serialization round trip is exact") {
    const KLBasis b = truncate(decompose(exp_kernel_group()), 0.9);
    const KLBasis back = kl_basis_from_json(kl_basis_to_json(b));
    CHECK(back.group_name == b.group_name);
    CHECK(back.d == b.d);
    CHECK(back.scale == b.scale);
    CHECK(back.mean == b.mean);
    CHECK(back.eigenvalues == b.eigenvalues);
    CHECK(back.eigenvectors == b.eigenvectors);
}

TEST_CASE("decompose is deterministic") {
    const KLBasis a = decompose(exp_kernel_group());
    const KLBasis b = decompose(exp_kernel_group());
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.eigenvectors == b.eigenvectors);
}
