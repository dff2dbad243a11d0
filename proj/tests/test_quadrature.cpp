#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plf/errors.hpp"
#include "plf/quadrature.hpp"

using namespace plf;

namespace {
// analytic moment of x^p over [-1,1]
double monomial_integral(int p) { return p % 2 == 1 ? 0.0 : 2.0 / (p + 1); }
}  // namespace

TEST_CASE("cc level 1 is the midpoint rule") {
    const Rule1D r = cc_rule(1);
    REQUIRE(r.order == 1);
    CHECK(r.nodes[0] == 0.0);
    CHECK(r.weights[0] == 2.0);
}

TEST_CASE("cc level 3 has the documented nodes") {
    const Rule1D r = cc_rule(3);
    REQUIRE(r.order == 5);
    const double s = std::sqrt(2.0) / 2.0;
    CHECK(r.nodes[0] == doctest::Approx(-1.0));
    CHECK(r.nodes[1] == doctest::Approx(-s));
    CHECK(r.nodes[2] == 0.0);
    CHECK(r.nodes[3] == doctest::Approx(s));
    CHECK(r.nodes[4] == doctest::Approx(1.0));
}

TEST_CASE("cc level 5 has 17 nodes") { CHECK(cc_rule(5).order == 17); }

TEST_CASE("f2 level 1 is the midpoint rule") {
    const Rule1D r = f2_rule(1);
    REQUIRE(r.order == 1);
    CHECK(r.nodes[0] == 0.0);
    CHECK(r.weights[0] == 2.0);
}

TEST_CASE("f2 level 2 nodes") {
    const Rule1D r = f2_rule(2);
    REQUIRE(r.order == 3);
    const double s = std::sqrt(2.0) / 2.0;
    CHECK(r.nodes[0] == doctest::Approx(-s));
    CHECK(r.nodes[1] == 0.0);
    CHECK(r.nodes[2] == doctest::Approx(s));
}

TEST_CASE("f2 level 3 integrates x^2 exactly") {
    const Rule1D r = f2_rule(3);
    REQUIRE(r.order == 7);
    CHECK(integrate(r, [](double x) { return x * x; }) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("fejer2 rules exclude the endpoints") {
    for (int k = 1; k <= 8; ++k) {
        const Rule1D r = f2_rule(k);
        for (double x : r.nodes) CHECK(std::abs(x) < 1.0);
    }
}

TEST_CASE("basic integrate examples") {
    for (RuleKind kind : {RuleKind::clenshaw_curtis, RuleKind::fejer2}) {
        for (int k = 1; k <= 6; ++k) {
            const Rule1D& r = rule(kind, k);
            CHECK(integrate(r, [](double) { return 1.0; }) == doctest::Approx(2.0).epsilon(1e-14));
            CHECK(std::abs(integrate(r, [](double x) { return x; })) <= 1e-14);
        }
    }
    CHECK(std::abs(integrate(cc_rule(3), [](double x) { return x * x * x * x; }) - 0.4) <= 1e-13);
}

TEST_CASE("weights sum to 2 and are positive through level 10") {
    for (RuleKind kind : {RuleKind::clenshaw_curtis, RuleKind::fejer2}) {
        for (int k = 1; k <= 10; ++k) {
            const Rule1D& r = rule(kind, k);
            double sum = 0;
            for (double w : r.weights) {
                CHECK(w > 0.0);
                sum += w;
            }
            CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("nodes are strictly increasing and exactly symmetric") {
    for (RuleKind kind : {RuleKind::clenshaw_curtis, RuleKind::fejer2}) {
        for (int k = 1; k <= 10; ++k) {
            const Rule1D& r = rule(kind, k);
            for (int j = 1; j < r.order; ++j) CHECK(r.nodes[j] > r.nodes[j - 1]);
            for (int j = 0; j < r.order; ++j) CHECK(r.nodes[j] == -r.nodes[r.order - 1 - j]);
        }
    }
}

TEST_CASE("nestedness is exact set inclusion, bitwise") {
    for (RuleKind kind : {RuleKind::clenshaw_curtis, RuleKind::fejer2}) {
        for (int k = 1; k < 9; ++k) {
            const Rule1D& a = rule(kind, k);
            const Rule1D& b = rule(kind, k + 1);
            for (double x : a.nodes) {
                bool found = false;
                for (double y : b.nodes)
                    if (x == y) { found = true; break; }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("polynomial exactness up to rule degree") {
    for (int k = 1; k <= 5; ++k) {
        const Rule1D& r = rule(RuleKind::clenshaw_curtis, k);
        for (int p = 0; p <= r.order - 1; ++p) {
            const double got = integrate(r, [p](double x) { return std::pow(x, p); });
            CHECK(std::abs(got - monomial_integral(p)) <= 1e-12);
        }
    }
    for (int k = 1; k <= 5; ++k) {
        const Rule1D& r = rule(RuleKind::fejer2, k);
        for (int p = 0; p <= r.order; ++p) {
            if (p == r.order && p % 2 == 0) continue;  // only odd degree m by symmetry
            const double got = integrate(r, [p](double x) { return std::pow(x, p); });
            CHECK(std::abs(got - monomial_integral(p)) <= 1e-12);
        }
    }
}

TEST_CASE("invalid level") {
    CHECK_THROWS_AS(cc_rule(0), Error);
    CHECK_THROWS_AS(f2_rule(-1), Error);
}
