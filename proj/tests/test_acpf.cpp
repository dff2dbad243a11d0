#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "plf/acpf.hpp"
#include "plf/errors.hpp"
#include "plf/util.hpp"

using namespace plf;

namespace {

PowerSystemCase two_bus(double p_load = 0.5, double q_load = 0.0, double x = 0.1,
                        double b_charging = 0.0) {
    PowerSystemCase sys;
    sys.base_mva = 100;
    sys.buses.push_back({1, BusType::slack, 0, 0, 0, 0, 1.0, 0.0});
    sys.buses.push_back({2, BusType::pq, p_load, q_load, 0, 0, 1.0, 0.0});
    sys.branches.push_back({1, 2, 0.0, x, b_charging, 0.0, 0.0, true});
    sys.generators.push_back({1, 0, 0, 1.0, -99, 99, true});
    return sys;
}

PowerSystemCase three_bus_ring() {
    PowerSystemCase sys;
    sys.base_mva = 100;
    sys.buses.push_back({1, BusType::slack, 0, 0, 0.01, 0.02, 1.0, 0.0});
    sys.buses.push_back({2, BusType::pv, 0.3, 0.1, 0, 0, 1.02, 0.0});
    sys.buses.push_back({3, BusType::pq, 0.6, 0.2, 0, 0.05, 1.0, 0.0});
    sys.branches.push_back({1, 2, 0.02, 0.08, 0.04, 0.0, 0.0, true});
    sys.branches.push_back({2, 3, 0.03, 0.12, 0.06, 0.0, 0.0, true});
    sys.branches.push_back({3, 1, 0.01, 0.05, 0.02, 0.98, 0.05, true});
    sys.generators.push_back({1, 0, 0, 1.0, -99, 99, true});
    sys.generators.push_back({2, 0.5, 0, 1.02, -0.4, 0.6, true});
    return sys;
}

std::complex<double> ybus_entry(const AdmittanceMatrix& Y, int i, int j) {
    return Y.Y.coeff(i, j);
}

PowerSystemCase load_118() {
    return parse_matpower_case(read_file(std::string(PLF_DATA_DIR) + "/case118.m"));
}

}  // namespace

TEST_CASE("ybus: 2-bus pure reactance") {
    const AdmittanceMatrix Y = build_ybus(two_bus());
    CHECK(ybus_entry(Y, 0, 0) == std::complex<double>(0, -10));
    CHECK(ybus_entry(Y, 0, 1) == std::complex<double>(0, 10));
    CHECK(ybus_entry(Y, 1, 0) == std::complex<double>(0, 10));
    CHECK(ybus_entry(Y, 1, 1) == std::complex<double>(0, -10));
}

TEST_CASE("ybus: half-charging on each diagonal") {
    const AdmittanceMatrix Y = build_ybus(two_bus(0.5, 0.0, 0.1, 0.2));
    CHECK(ybus_entry(Y, 0, 0).imag() == doctest::Approx(-10 + 0.1).epsilon(1e-14));
    CHECK(ybus_entry(Y, 1, 1).imag() == doctest::Approx(-10 + 0.1).epsilon(1e-14));
}

TEST_CASE("ybus: 3-bus ring matches hand assembly") {
    const PowerSystemCase sys = three_bus_ring();
    const AdmittanceMatrix Y = build_ybus(sys);
    using C = std::complex<double>;
    // hand-computed element by element from the pi model
    const C y12 = 1.0 / C(0.02, 0.08);
    const C y23 = 1.0 / C(0.03, 0.12);
    const C y31 = 1.0 / C(0.01, 0.05);
    const double tap = 0.98;
    const C tc = std::polar(tap, 0.05);
    const C Y00 = y12 + C(0, 0.02) + (y31 + C(0, 0.01)) /* to-side of 3-1 */ + C(0.01, 0.02);
    CHECK(std::abs(ybus_entry(Y, 0, 0) - Y00) <= 1e-12);
    const C Y01 = -y12;
    CHECK(std::abs(ybus_entry(Y, 0, 1) - Y01) <= 1e-12);
    const C Y22 = y23 + C(0, 0.03) + (y31 + C(0, 0.01)) / (tap * tap) + C(0, 0.05);
    CHECK(std::abs(ybus_entry(Y, 2, 2) - Y22) <= 1e-12);
    const C Y20 = -y31 / std::conj(tc);  // from(3) -> to(1)
    CHECK(std::abs(ybus_entry(Y, 2, 0) - Y20) <= 1e-12);
    const C Y02 = -y31 / tc;
    CHECK(std::abs(ybus_entry(Y, 0, 2) - Y02) <= 1e-12);
}

TEST_CASE("ybus rows sum to zero without shunts, taps, charging") {
    PowerSystemCase sys = three_bus_ring();
    for (Bus& b : sys.buses) { b.g_shunt = 0; b.b_shunt = 0; }
    for (Branch& br : sys.branches) { br.b_charging = 0; br.tap_ratio = 0; br.phase_shift = 0; }
    const AdmittanceMatrix Y = build_ybus(sys);
    for (int i = 0; i < 3; ++i) {
        std::complex<double> row_sum = 0;
        for (int j = 0; j < 3; ++j) row_sum += ybus_entry(Y, i, j);
        CHECK(std::abs(row_sum) <= 1e-12);
    }
}

TEST_CASE("ybus: zero impedance branch raises") {
    PowerSystemCase sys = two_bus();
    sys.branches[0].r = 0;
    sys.branches[0].x = 0;
    CHECK_THROWS_AS(build_ybus(sys), Error);
}

TEST_CASE("2-bus closed form solution") {
    // 10 V2 sin(t2) = -0.5 and V2 = cos(t2)  =>  t2 = asin(-0.1)/2
    const double t2 = std::asin(-0.1) / 2.0;
    const double v2 = std::cos(t2);
    const PowerFlowSolution sol = solve_newton(two_bus());
    REQUIRE(sol.converged);
    CHECK(sol.max_mismatch < 1e-8);
    CHECK(std::abs(sol.v_ang[1] - t2) <= 1e-8);
    CHECK(std::abs(sol.v_mag[1] - v2) <= 1e-8);
    CHECK(std::abs(sol.p_inj[1] + 0.5) <= 1e-8);
}

TEST_CASE("zero-load flat start converges immediately") {
    PowerSystemCase sys = two_bus(0.0, 0.0);
    const PowerFlowSolution sol = solve_newton(sys);
    REQUIRE(sol.converged);
    CHECK(sol.iterations <= 2);
    CHECK(sol.v_mag[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(sol.v_ang[1]) <= 1e-12);
}

TEST_CASE("newton quadratic tail on the 2-bus fixture") {
    PowerFlowOptions opt;
    opt.tol = 1e-14;
    const PowerFlowSolution sol = solve_newton(two_bus(0.9, 0.3), opt);
    const auto& h = sol.mismatch_history;
    REQUIRE(h.size() >= 4);
    int checked = 0;
    for (size_t k = h.size() - 1; k >= 2 && checked < 2; --k) {
        if (h[k] == 0.0) continue;  // converged below double precision
        CHECK(h[k] <= 1e3 * h[k - 1] * h[k - 1]);
        ++checked;
    }
    CHECK(checked >= 1);
}

TEST_CASE("mismatch certificate: recompute injections from scratch") {
    const PowerSystemCase sys = three_bus_ring();
    const PowerFlowSolution sol = solve_newton(sys);
    REQUIRE(sol.converged);
    const AdmittanceMatrix Y = build_ybus(sys);
    Eigen::VectorXcd v(3);
    for (int i = 0; i < 3; ++i) v[i] = std::polar(sol.v_mag[i], sol.v_ang[i]);
    const Eigen::VectorXcd inj = Y.Y * v;
    // scheduled: slack free; pv: P fixed; pq: P and Q fixed
    const std::complex<double> s1 = v[1] * std::conj(inj[1]);
    const std::complex<double> s2 = v[2] * std::conj(inj[2]);
    CHECK(std::abs(s1.real() - (0.5 - 0.3)) <= 1e-8);
    CHECK(std::abs(s2.real() - (-0.6)) <= 1e-8);
    CHECK(std::abs(s2.imag() - (-0.2)) <= 1e-8);
}

TEST_CASE("slack balance: injections equal losses plus shunt consumption") {
    for (const PowerSystemCase& sys : {three_bus_ring(), load_118()}) {
        const PowerFlowSolution sol = solve_newton(sys);
        REQUIRE(sol.converged);
        double inj = sol.p_inj.sum();
        double branch_losses = (sol.p_from + sol.p_to).sum();
        double shunt = 0;
        for (size_t i = 0; i < sys.buses.size(); ++i)
            shunt += sys.buses[i].g_shunt * sol.v_mag[static_cast<int>(i)] *
                     sol.v_mag[static_cast<int>(i)];
        double load = 0, gen_sched = 0;
        for (const Bus& b : sys.buses) load += b.p_demand;
        CHECK(std::abs(inj - branch_losses - shunt) <= 1e-8);
        (void)load;
        (void)gen_sched;
    }
}

TEST_CASE("118-bus base case matches the committed reference fixture") {
    const PowerSystemCase sys = load_118();
    const PowerFlowSolution sol = solve_newton(sys);
    REQUIRE(sol.converged);
    CHECK(sol.max_mismatch <= 1e-8);

    std::ifstream in(std::string(PLF_FIXTURE_DIR) + "/case118_refsol.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);  // header
    int row = 0;
    double max_dv = 0, max_da = 0, max_dp = 0, max_dq = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int bus;
        double vm, va, p, q;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &bus, &vm, &va, &p, &q) == 5);
        max_dv = std::max(max_dv, std::abs(sol.v_mag[row] - vm));
        max_da = std::max(max_da, std::abs(sol.v_ang[row] - va));
        max_dp = std::max(max_dp, std::abs(sol.p_inj[row] - p));
        max_dq = std::max(max_dq, std::abs(sol.q_inj[row] - q));
        ++row;
    }
    REQUIRE(row == 118);
    CHECK(max_dv <= 1e-6);
    CHECK(max_da <= 1e-6);
    CHECK(max_dp <= 1e-6);
    CHECK(max_dq <= 1e-6);
}

TEST_CASE("q-limit enforcement keeps every generator in range") {
    PowerFlowOptions opt;
    opt.enforce_q_limits = true;
    const PowerSystemCase sys = load_118();
    const PowerFlowSolution sol = solve_newton(sys, opt);
    REQUIRE(sol.converged);
    const auto idx = sys.bus_index_map();
    std::vector<double> qg_min(sys.buses.size(), 0), qg_max(sys.buses.size(), 0);
    std::vector<bool> has_gen(sys.buses.size(), false);
    for (const Generator& g : sys.generators) {
        if (!g.in_service) continue;
        const int i = idx.at(g.bus);
        qg_min[i] += g.q_min;
        qg_max[i] += g.q_max;
        has_gen[i] = true;
    }
    for (size_t i = 0; i < sys.buses.size(); ++i) {
        if (!has_gen[i] || sys.buses[i].bus_type == BusType::slack) continue;
        const double qg = sol.q_inj[static_cast<int>(i)] + sys.buses[i].q_demand;
        CHECK(qg <= qg_max[i] + 1e-9);
        CHECK(qg >= qg_min[i] - 1e-9);
    }
}

TEST_CASE("branch flows: open branch reports zero") {
    PowerSystemCase sys = three_bus_ring();
    sys.branches[1].in_service = false;
    const PowerFlowSolution sol = solve_newton(sys);
    REQUIRE(sol.converged);
    CHECK(sol.p_from[1] == 0.0);
    CHECK(sol.q_to[1] == 0.0);
}

TEST_CASE("branch flows: lossless 2-bus line carries the load") {
    const PowerFlowSolution sol = solve_newton(two_bus());
    CHECK(sol.p_from[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(sol.p_to[0] == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("branch flows: identical end voltages leave only charging") {
    PowerSystemCase sys = two_bus(0, 0, 0.1, 0.2);
    const BranchFlows fl = compute_branch_flows(sys, Eigen::Vector2d(1.0, 1.0),
                                                Eigen::Vector2d(0.0, 0.0));
    CHECK(std::abs(fl.p_from[0]) <= 1e-14);
    CHECK(fl.q_from[0] == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(fl.q_to[0] == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("diverged solve returns a flagged partial solution") {
    // infeasible load far beyond the line's transfer capacity
    const PowerSystemCase sys = two_bus(80.0, 0.0);
    const PowerFlowSolution sol = solve_newton(sys);
    CHECK_FALSE(sol.converged);
    CHECK(sol.max_mismatch > 1e-8);
}
