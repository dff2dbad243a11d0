#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plf/errors.hpp"
#include "plf/stats.hpp"

using namespace plf;

namespace {

// collocation result over a grid with outputs given by a callback
PLFResult grid_result(GridKind kind, RuleKind rule, int w, int d,
                      const std::function<double(const std::vector<double>&)>& f) {
    PLFResult r;
    r.method = RunMethod::collocation;
    r.grid = assemble(kind, rule, w, d);
    const int n = r.grid.node_count();
    r.xi.resize(n, d);
    r.outputs.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) r.xi(i, k) = r.grid.nodes[i][k];
        r.outputs(i, 0) = f(r.grid.nodes[i]);
    }
    r.records.assign(n, NodeRecord{true, 1, 0.0});
    r.n_bus = 0;
    r.n_branch = 0;
    return r;
}

PLFResult mc_result(const Eigen::MatrixXd& outputs) {
    PLFResult r;
    r.method = RunMethod::monte_carlo;
    r.outputs = outputs;
    r.records.assign(outputs.rows(), NodeRecord{true, 1, 0.0});
    return r;
}

}  // namespace

TEST_CASE("quadrature moments: constant surrogate") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::clenshaw_curtis, 2, 2,
                                    [](const std::vector<double>&) { return 3.25; });
    const Moments m = moments_quadrature(r);
    CHECK(m.mean[0] == doctest::Approx(3.25).epsilon(1e-13));
    CHECK(m.stddev[0] <= 1e-7);
}

TEST_CASE("quadrature moments: f = z1 has mean 0 and std sqrt(1/3)") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::clenshaw_curtis, 2, 2,
                                    [](const std::vector<double>& z) { return z[0]; });
    const Moments m = moments_quadrature(r);
    CHECK(std::abs(m.mean[0]) <= 1e-10);
    CHECK(m.stddev[0] == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("quadrature moments renormalize over diverged nodes") {
    PLFResult r = grid_result(GridKind::isotropic, RuleKind::fejer2, 2, 2,
                              [](const std::vector<double>&) { return 2.0; });
    r.records[3].converged = false;
    r.n_diverged = 1;
    const Moments m = moments_quadrature(r);
    CHECK(m.renormalized);
    CHECK(m.mean[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("all nodes diverged raises") {
    PLFResult r = grid_result(GridKind::isotropic, RuleKind::fejer2, 1, 1,
                              [](const std::vector<double>&) { return 0.0; });
    for (auto& rec : r.records) rec.converged = false;
    r.n_diverged = static_cast<int>(r.records.size());
    CHECK_THROWS_AS(moments_quadrature(r), Error);
}

TEST_CASE("empirical moments: degenerate and 2-sample cases") {
    Eigen::MatrixXd one(1, 1);
    one << 5.0;
    const Moments m1 = moments_empirical(mc_result(one));
    CHECK(m1.single_sample);
    CHECK(m1.stddev[0] == 0.0);

    Eigen::MatrixXd two(2, 1);
    two << 1.0, 4.0;
    const Moments m2 = moments_empirical(mc_result(two));
    CHECK(m2.mean[0] == doctest::Approx(2.5));
    CHECK(m2.stddev[0] == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("empirical moments: uniform passthrough std") {
    Eigen::MatrixXd samples(10000, 1);
    std::uint64_t state = 321;
    for (int i = 0; i < 10000; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        samples(i, 0) = 2.0 * (static_cast<double>(state >> 11) * 0x1.0p-53) - 1.0;
    }
    const Moments m = moments_empirical(mc_result(samples));
    CHECK(m.stddev[0] == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(0.02));
}

TEST_CASE("interpolant sampling: constant surrogate puts all mass in one bin") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::fejer2, 1, 2,
                                    [](const std::vector<double>&) { return 1.5; });
    const Eigen::MatrixXd s = sample_interpolant(r.grid, r.outputs, {0}, 2000, 4, 1);
    const Histogram h = histogram(std::span<const double>(s.col(0).data(), s.rows()), 1.5, 1.5, 10);
    int occupied = 0;
    for (double d : h.density) occupied += d > 0 ? 1 : 0;
    CHECK(occupied == 1);
    const Cdf c = empirical_cdf({s.col(0).begin(), s.col(0).end()});
    CHECK(c.prob.front() > 0.0);
    CHECK(c.prob.back() == doctest::Approx(1.0));
    CHECK(c.values.back() - c.values.front() <= 1e-12);  // step
}

TEST_CASE("linear surrogate has a flat pdf") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::clenshaw_curtis, 2, 2,
                                    [](const std::vector<double>& z) { return z[0]; });
    const Eigen::MatrixXd s = sample_interpolant(r.grid, r.outputs, {0}, 400000, 9, 0);
    const Histogram h =
        histogram(std::span<const double>(s.col(0).data(), s.rows()), -1.0, 1.0, 20);
    for (double d : h.density) CHECK(d == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("sum of two uniforms: cdf matches the triangular law") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::clenshaw_curtis, 1, 2,
                                    [](const std::vector<double>& z) { return z[0] + z[1]; });
    const int n = 1000000;
    const Eigen::MatrixXd s = sample_interpolant(r.grid, r.outputs, {0}, n, 31, 0);
    const Cdf c = empirical_cdf({s.col(0).begin(), s.col(0).end()});
    auto analytic = [](double t) {
        if (t <= 0) return (t + 2.0) * (t + 2.0) / 8.0;
        return 1.0 - (2.0 - t) * (2.0 - t) / 8.0;
    };
    double sup = 0;
    for (size_t i = 0; i < c.values.size(); i += 97)
        sup = std::max(sup, std::abs(c.prob[i] - analytic(c.values[i])));
    CHECK(sup <= 0.01);
}

TEST_CASE("sampling is independent of the worker count") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::fejer2, 2, 3,
                                    [](const std::vector<double>& z) { return z[0] * z[1] + z[2]; });
    const Eigen::MatrixXd a = sample_interpolant(r.grid, r.outputs, {0}, 10000, 5, 1);
    const Eigen::MatrixXd b = sample_interpolant(r.grid, r.outputs, {0}, 10000, 5, 4);
    CHECK(a == b);
}

TEST_CASE("pdf normalization and cdf monotonicity") {
    std::vector<double> samples;
    std::uint64_t state = 7;
    for (int i = 0; i < 50000; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        samples.push_back(std::sin(static_cast<double>(state >> 40)));
    }
    const Histogram h = histogram(samples, -1.0, 1.0, 100);
    double mass = 0;
    for (size_t b = 0; b < h.density.size(); ++b)
        mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

    const Cdf c = empirical_cdf(samples);
    for (size_t i = 1; i < c.prob.size(); ++i) {
        CHECK(c.prob[i] >= c.prob[i - 1]);
        CHECK(c.values[i] >= c.values[i - 1]);
    }
    CHECK(c.prob.front() <= 1.0 / samples.size() + 1e-15);
    CHECK(c.prob.back() == doctest::Approx(1.0));
}

TEST_CASE("kld: identical histograms give zero") {
    const std::vector<double> s = {0.1, 0.2, 0.3, 0.5, 0.9};
    const Histogram h = histogram(s, 0.0, 1.0, 10);
    CHECK(std::abs(kld(h, h)) <= 1e-12);
}

TEST_CASE("kld: documented two-bin arithmetic") {
    Histogram ref, grid;
    ref.edges = {0.0, 1.0, 2.0};
    ref.density = {0.5, 0.5};
    grid.edges = ref.edges;
    grid.density = {0.9, 0.1};
    const double expected = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
    CHECK(kld(ref, grid) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(kld(ref, grid) == doctest::Approx(0.5108256238).epsilon(1e-9));
}

TEST_CASE("kld: empty grid bin stays finite through the floor") {
    Histogram ref, grid;
    ref.edges = {0.0, 1.0, 2.0};
    ref.density = {0.5, 0.5};
    grid.edges = ref.edges;
    grid.density = {1.0, 0.0};
    const double v = kld(ref, grid);
    CHECK(std::isfinite(v));
    CHECK(v > 0);
}

TEST_CASE("kld: mismatched bins raise") {
    Histogram a, b;
    a.edges = {0, 1, 2};
    a.density = {0.5, 0.5};
    b.edges = {0, 0.5, 1};
    b.density = {1.0, 1.0};
    CHECK_THROWS_AS(kld(a, b), Error);
}

TEST_CASE("kld non-negativity on random mass vectors") {
    std::uint64_t state = 17;
    auto u01 = [&state] {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 200; ++trial) {
        Histogram a, b;
        const int bins = 8;
        a.edges.resize(bins + 1);
        for (int i = 0; i <= bins; ++i) a.edges[i] = i;
        b.edges = a.edges;
        double sa = 0, sb = 0;
        for (int i = 0; i < bins; ++i) {
            a.density.push_back(u01());
            b.density.push_back(u01());
            sa += a.density.back();
            sb += b.density.back();
        }
        for (double& d : a.density) d /= sa;
        for (double& d : b.density) d /= sb;
        CHECK(kld(a, b) >= -1e-12);
    }
}

TEST_CASE("relative error metric and division guard") {
    CHECK(relative_error_pct(1.0, 1.0).value == 0.0);
    const ErrorMetric m = relative_error_pct(0.10, 0.088);
    CHECK_FALSE(m.absolute);
    CHECK(m.value == doctest::Approx(12.0).epsilon(1e-12));
    const ErrorMetric g = relative_error_pct(0.0, 0.5);
    CHECK(g.absolute);
    CHECK(g.value == doctest::Approx(0.5));
}

TEST_CASE("quadrature and sampling moments agree on a populated interpolant") {
    const PLFResult r = grid_result(GridKind::isotropic, RuleKind::clenshaw_curtis, 3, 2,
                                    [](const std::vector<double>& z) {
                                        return std::exp(0.4 * z[0]) + 0.2 * z[1] * z[1];
                                    });
    const Moments qm = moments_quadrature(r);
    const int n = 1000000;
    const Eigen::MatrixXd s = sample_interpolant(r.grid, r.outputs, {0}, n, 77, 0);
    const double sample_mean = s.col(0).mean();
    const double sample_sd =
        std::sqrt((s.col(0).array() - sample_mean).square().sum() / (n - 1));
    const double se = sample_sd / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(qm.mean[0] - sample_mean) <= 5 * se);
}
