#!/usr/bin/env python3
"""Reference AC power flow solver (NumPy), independent of the C++ code.

Parses a MATPOWER case file with a minimal regex-based reader, solves the
power flow by Newton-Raphson in polar form, and writes a per-bus reference
solution CSV used as a frozen test fixture.

Usage: ref_pf.py CASE.m OUT.csv [--check-stored]

--check-stored compares the solved voltages against the Vm/Va columns stored
in the case file (MATPOWER cases ship with a solved base case) and reports
the largest deviations; a large deviation indicates corrupted case data.
"""
import re
import sys

import numpy as np


def parse_matrix(text, name):
    m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S)
    if m is None:
        raise SystemExit("matrix %s not found" % name)
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if not line:
            continue
        rows.append([float(tok) for tok in line.split()])
    return np.array(rows)


def parse_case(path):
    text = open(path).read()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([\d.eE+-]+)\s*;", text).group(1))
    return base, parse_matrix(text, "bus"), parse_matrix(text, "gen"), parse_matrix(text, "branch")


def build_ybus(base, bus, branch):
    n = bus.shape[0]
    id2idx = {int(b): i for i, b in enumerate(bus[:, 0])}
    Y = np.zeros((n, n), dtype=complex)
    for row in branch:
        if row[10] == 0:
            continue
        f, t = id2idx[int(row[0])], id2idx[int(row[1])]
        ys = 1.0 / (row[2] + 1j * row[3])
        bc = row[4]
        tap = row[8] if row[8] != 0 else 1.0
        shift = np.deg2rad(row[9])
        tcplx = tap * np.exp(1j * shift)
        Y[f, f] += (ys + 1j * bc / 2) / (tap * tap)
        Y[t, t] += ys + 1j * bc / 2
        Y[f, t] += -ys / np.conj(tcplx)
        Y[t, f] += -ys / tcplx
    for i in range(n):
        Y[i, i] += (bus[i, 4] + 1j * bus[i, 5]) / base
    return Y, id2idx


def solve(base, bus, gen, branch, tol=1e-10, max_iter=40):
    n = bus.shape[0]
    Y, id2idx = build_ybus(base, bus, branch)
    btype = bus[:, 1].astype(int)
    p_sched = -bus[:, 2] / base
    q_sched = -bus[:, 3] / base
    vset = {}
    for row in gen:
        if row[7] == 0:
            continue
        i = id2idx[int(row[0])]
        p_sched[i] += row[1] / base
        q_sched[i] += row[2] / base
        vset[i] = row[5]
    slack = int(np.where(btype == 3)[0][0])
    pv = [i for i in range(n) if btype[i] == 2]
    pq = [i for i in range(n) if btype[i] == 1]

    vm = np.ones(n)
    va = np.zeros(n)
    va[:] = np.deg2rad(bus[slack, 8])
    for i in pv + [slack]:
        vm[i] = vset.get(i, bus[i, 7])

    pvpq = pv + pq
    for it in range(max_iter):
        v = vm * np.exp(1j * va)
        s_calc = v * np.conj(Y @ v)
        dp = s_calc.real - p_sched
        dq = s_calc.imag - q_sched
        f = np.concatenate([dp[pvpq], dq[pq]])
        if np.max(np.abs(f)) < tol:
            return vm, va, s_calc, it
        # polar Jacobian, dense
        diag_v = np.diag(v)
        diag_i = np.diag(Y @ v)
        diag_vn = np.diag(v / vm)
        ds_dva = 1j * diag_v @ np.conj(diag_i - Y @ diag_v)
        ds_dvm = diag_v @ np.conj(Y @ diag_vn) + np.conj(diag_i) @ diag_vn
        j11 = ds_dva[np.ix_(pvpq, pvpq)].real
        j12 = ds_dvm[np.ix_(pvpq, pq)].real
        j21 = ds_dva[np.ix_(pq, pvpq)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        J = np.block([[j11, j12], [j21, j22]])
        dx = np.linalg.solve(J, -f)
        va[pvpq] += dx[: len(pvpq)]
        vm[pq] += dx[len(pvpq):]
    raise SystemExit("did not converge")


def main():
    case_path, out_path = sys.argv[1], sys.argv[2]
    base, bus, gen, branch = parse_case(case_path)
    vm, va, s_calc, iters = solve(base, bus, gen, branch)
    print("converged in %d iterations" % iters)
    print("total injection %.6f pu, total load %.2f MW" % (s_calc.real.sum(), bus[:, 2].sum()))
    if "--check-stored" in sys.argv:
        dvm = np.abs(vm - bus[:, 7])
        dva = np.abs(np.rad2deg(va) - bus[:, 8])
        print("max |Vm - stored| = %.4f at bus %d" % (dvm.max(), bus[np.argmax(dvm), 0]))
        print("max |Va - stored| = %.4f deg at bus %d" % (dva.max(), bus[np.argmax(dva), 0]))
        worst = np.argsort(-dvm)[:8]
        for i in worst:
            print("  bus %4d  Vm %.4f stored %.4f   Va %8.3f stored %8.3f"
                  % (bus[i, 0], vm[i], bus[i, 7], np.rad2deg(va[i]), bus[i, 8]))
    with open(out_path, "w") as fh:
        fh.write("bus,v_mag,v_ang_rad,p_inj,q_inj\n")
        for i in range(bus.shape[0]):
            fh.write("%d,%.15e,%.15e,%.15e,%.15e\n"
                     % (bus[i, 0], vm[i], va[i], s_calc[i].real, s_calc[i].imag))
    print("wrote", out_path)


if __name__ == "__main__":
    main()
