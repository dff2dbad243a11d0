#include "plf/acpf.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "plf/errors.hpp"

namespace plf {

using Complex = std::complex<double>;

AdmittanceMatrix build_ybus(const PowerSystemCase& sys) {
    const int n = static_cast<int>(sys.buses.size());
    const auto idx = sys.bus_index_map();
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(sys.branches.size() * 4 + n);
    for (size_t k = 0; k < sys.branches.size(); ++k) {
        const Branch& br = sys.branches[k];
        if (!br.in_service) continue;
        if (br.r == 0.0 && br.x == 0.0)
            throw Error("ZeroImpedanceBranch", "branch " + std::to_string(k) + " has r = x = 0");
        const int f = idx.at(br.from_bus);
        const int t = idx.at(br.to_bus);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ysh(0.0, br.b_charging / 2.0);
        const double tap = br.tap_ratio == 0.0 ? 1.0 : br.tap_ratio;
        const Complex tc = std::polar(tap, br.phase_shift);
        trip.emplace_back(f, f, (ys + ysh) / (tap * tap));
        trip.emplace_back(t, t, ys + ysh);
        trip.emplace_back(f, t, -ys / std::conj(tc));
        trip.emplace_back(t, f, -ys / tc);
    }
    for (int i = 0; i < n; ++i)
        trip.emplace_back(i, i, Complex(sys.buses[i].g_shunt, sys.buses[i].b_shunt));

    AdmittanceMatrix Y;
    Y.n = n;
    Y.Y.resize(n, n);
    Y.Y.setFromTriplets(trip.begin(), trip.end());
    Y.Y.makeCompressed();
    return Y;
}

namespace {

struct BusModel {
    std::vector<int> type;        // 0 slack, 1 pv, 2 pq (working copy)
    Eigen::VectorXd p_sched, q_sched;
    Eigen::VectorXd v_setpoint;   // for slack/pv buses
    std::vector<double> qg_min, qg_max;  // aggregate gen limits per bus, p.u.
    std::vector<bool> has_gen;
    int slack = -1;
};

BusModel aggregate(const PowerSystemCase& sys) {
    const int n = static_cast<int>(sys.buses.size());
    const auto idx = sys.bus_index_map();
    BusModel m;
    m.type.resize(n);
    m.p_sched = Eigen::VectorXd::Zero(n);
    m.q_sched = Eigen::VectorXd::Zero(n);
    m.v_setpoint.resize(n);
    m.qg_min.assign(n, 0.0);
    m.qg_max.assign(n, 0.0);
    m.has_gen.assign(n, false);
    for (int i = 0; i < n; ++i) {
        const Bus& b = sys.buses[i];
        m.type[i] = b.bus_type == BusType::slack ? 0 : b.bus_type == BusType::pv ? 1 : 2;
        if (m.type[i] == 0) m.slack = i;
        m.p_sched[i] = -b.p_demand;
        m.q_sched[i] = -b.q_demand;
        m.v_setpoint[i] = b.v_mag_init;
    }
    std::vector<bool> vset_seen(n, false);
    for (const Generator& g : sys.generators) {
        if (!g.in_service) continue;
        const int i = idx.at(g.bus);
        m.p_sched[i] += g.p_set;
        m.q_sched[i] += g.q_set;
        m.qg_min[i] += g.q_min;
        m.qg_max[i] += g.q_max;
        m.has_gen[i] = true;
        if (!vset_seen[i]) {
            m.v_setpoint[i] = g.v_set;
            vset_seen[i] = true;
        } else if (std::abs(m.v_setpoint[i] - g.v_set) > 1e-6) {
            throw Error("ValidationFailed", "conflicting generator voltage setpoints at bus " +
                                                std::to_string(g.bus));
        }
    }
    if (m.slack < 0) throw Error("ValidationFailed", "no slack bus");
    return m;
}

// One Newton solve with a fixed PV/PQ partition. Returns iterations used.
int newton_loop(const Eigen::SparseMatrix<Complex>& Y, const BusModel& m, double tol, int max_iter,
                Eigen::VectorXd& vm, Eigen::VectorXd& va, Eigen::VectorXd& p_calc,
                Eigen::VectorXd& q_calc, double& max_mismatch, std::vector<double>& history) {
    const int n = static_cast<int>(vm.size());
    std::vector<int> pvpq, pq;
    for (int i = 0; i < n; ++i) {
        if (m.type[i] != 0) pvpq.push_back(i);
        if (m.type[i] == 2) pq.push_back(i);
    }
    std::vector<int> pos_ang(n, -1), pos_mag(n, -1);
    for (size_t k = 0; k < pvpq.size(); ++k) pos_ang[pvpq[k]] = static_cast<int>(k);
    for (size_t k = 0; k < pq.size(); ++k) pos_mag[pq[k]] = static_cast<int>(pvpq.size() + k);
    const int nvar = static_cast<int>(pvpq.size() + pq.size());

    Eigen::VectorXcd v(n);
    auto recompute = [&] {
        for (int i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
        Eigen::VectorXcd inj = Y * v;
        for (int i = 0; i < n; ++i) {
            const Complex s = v[i] * std::conj(inj[i]);
            p_calc[i] = s.real();
            q_calc[i] = s.imag();
        }
        double mm = 0.0;
        for (int i : pvpq) mm = std::max(mm, std::abs(p_calc[i] - m.p_sched[i]));
        for (int i : pq) mm = std::max(mm, std::abs(q_calc[i] - m.q_sched[i]));
        return mm;
    };

    max_mismatch = recompute();
    history.push_back(max_mismatch);
    int it = 0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    while (max_mismatch > tol && it < max_iter) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(Y.nonZeros()) * 4);
        for (int col = 0; col < n; ++col) {
            for (Eigen::SparseMatrix<Complex>::InnerIterator yit(Y, col); yit; ++yit) {
                const int i = static_cast<int>(yit.row());
                const int k = col;
                const double G = yit.value().real();
                const double B = yit.value().imag();
                double dp_da, dp_dv, dq_da, dq_dv;
                if (i == k) {
                    dp_da = -q_calc[i] - B * vm[i] * vm[i];
                    dp_dv = p_calc[i] / vm[i] + G * vm[i];
                    dq_da = p_calc[i] - G * vm[i] * vm[i];
                    dq_dv = q_calc[i] / vm[i] - B * vm[i];
                } else {
                    const double tik = va[i] - va[k];
                    const double ct = std::cos(tik), st = std::sin(tik);
                    dp_da = vm[i] * vm[k] * (G * st - B * ct);
                    dp_dv = vm[i] * (G * ct + B * st);
                    dq_da = -vm[i] * vm[k] * (G * ct + B * st);
                    dq_dv = vm[i] * (G * st - B * ct);
                }
                if (pos_ang[i] >= 0 && pos_ang[k] >= 0) trip.emplace_back(pos_ang[i], pos_ang[k], dp_da);
                if (pos_ang[i] >= 0 && pos_mag[k] >= 0) trip.emplace_back(pos_ang[i], pos_mag[k], dp_dv);
                if (pos_mag[i] >= 0 && pos_ang[k] >= 0) trip.emplace_back(pos_mag[i], pos_ang[k], dq_da);
                if (pos_mag[i] >= 0 && pos_mag[k] >= 0) trip.emplace_back(pos_mag[i], pos_mag[k], dq_dv);
            }
        }
        Eigen::SparseMatrix<double> J(nvar, nvar);
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();

        Eigen::VectorXd f(nvar);
        for (int i : pvpq) f[pos_ang[i]] = p_calc[i] - m.p_sched[i];
        for (int i : pq) f[pos_mag[i]] = q_calc[i] - m.q_sched[i];

        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw Error("SingularJacobian", "Jacobian factorization failed");
        Eigen::VectorXd dx = lu.solve(-f);
        if (lu.info() != Eigen::Success)
            throw Error("SingularJacobian", "Jacobian solve failed");

        for (int i : pvpq) va[i] += dx[pos_ang[i]];
        for (int i : pq) vm[i] += dx[pos_mag[i]];
        ++it;
        max_mismatch = recompute();
        history.push_back(max_mismatch);
    }
    return it;
}

}  // namespace

PowerFlowSolution solve_newton(const PowerSystemCase& sys, const PowerFlowOptions& opt) {
    validate_case(sys);
    const int n = static_cast<int>(sys.buses.size());
    const AdmittanceMatrix ybus = build_ybus(sys);
    BusModel model = aggregate(sys);

    PowerFlowSolution sol;
    sol.v_mag.resize(n);
    sol.v_ang.resize(n);
    sol.p_inj.resize(n);
    sol.q_inj.resize(n);

    Eigen::VectorXd vm(n), va(n);
    const double slack_ang = sys.buses[model.slack].v_ang_init;
    for (int i = 0; i < n; ++i) {
        if (opt.start == StartMode::flat) {
            vm[i] = (model.type[i] != 2) ? model.v_setpoint[i] : 1.0;
            va[i] = slack_ang;
        } else {
            vm[i] = (model.type[i] != 2) ? model.v_setpoint[i] : sys.buses[i].v_mag_init;
            va[i] = sys.buses[i].v_ang_init;
        }
    }

    int total_iter = 0;
    double max_mismatch = 0.0;
    const int outer_rounds = opt.enforce_q_limits ? 10 : 1;
    for (int round = 0; round < outer_rounds; ++round) {
        total_iter += newton_loop(ybus.Y, model, opt.tol, opt.max_iter, vm, va,
                                  sol.p_inj, sol.q_inj, max_mismatch, sol.mismatch_history);
        if (max_mismatch > opt.tol) break;
        if (!opt.enforce_q_limits) break;
        // convert violated PV buses to PQ at the binding limit
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            if (model.type[i] != 1) continue;
            const double qg = sol.q_inj[i] + sys.buses[i].q_demand;
            if (qg > model.qg_max[i] + 1e-9) {
                model.type[i] = 2;
                model.q_sched[i] = model.qg_max[i] - sys.buses[i].q_demand;
                changed = true;
            } else if (qg < model.qg_min[i] - 1e-9) {
                model.type[i] = 2;
                model.q_sched[i] = model.qg_min[i] - sys.buses[i].q_demand;
                changed = true;
            }
        }
        if (!changed) break;
    }

    sol.v_mag = vm;
    sol.v_ang = va;
    sol.iterations = total_iter;
    sol.max_mismatch = max_mismatch;
    sol.converged = max_mismatch <= opt.tol;

    const BranchFlows flows = compute_branch_flows(sys, vm, va);
    sol.p_from = flows.p_from;
    sol.q_from = flows.q_from;
    sol.p_to = flows.p_to;
    sol.q_to = flows.q_to;
    return sol;
}

BranchFlows compute_branch_flows(const PowerSystemCase& sys, const Eigen::VectorXd& v_mag,
                                 const Eigen::VectorXd& v_ang) {
    const int nb = static_cast<int>(sys.branches.size());
    const auto idx = sys.bus_index_map();
    BranchFlows fl;
    fl.p_from = Eigen::VectorXd::Zero(nb);
    fl.q_from = Eigen::VectorXd::Zero(nb);
    fl.p_to = Eigen::VectorXd::Zero(nb);
    fl.q_to = Eigen::VectorXd::Zero(nb);
    for (int k = 0; k < nb; ++k) {
        const Branch& br = sys.branches[k];
        if (!br.in_service) continue;
        const int f = idx.at(br.from_bus);
        const int t = idx.at(br.to_bus);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ysh(0.0, br.b_charging / 2.0);
        const double tap = br.tap_ratio == 0.0 ? 1.0 : br.tap_ratio;
        const Complex tc = std::polar(tap, br.phase_shift);
        const Complex vf = std::polar(v_mag[f], v_ang[f]);
        const Complex vt = std::polar(v_mag[t], v_ang[t]);
        const Complex if_ = (ys + ysh) / (tap * tap) * vf - ys / std::conj(tc) * vt;
        const Complex it_ = (ys + ysh) * vt - ys / tc * vf;
        const Complex sf = vf * std::conj(if_);
        const Complex st = vt * std::conj(it_);
        fl.p_from[k] = sf.real();
        fl.q_from[k] = sf.imag();
        fl.p_to[k] = st.real();
        fl.q_to[k] = st.imag();
    }
    return fl;
}

}  // namespace plf
