"""Acceptance suite: one pass/fail line per criterion (see the summary section)."""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from varstab import field, rod, scalar, spectral
from varstab.jacobi import PiecewiseConstant, classify, coupled_point_condition, second_variation
from varstab.problem import ExtremalPath
from varstab.verdict import Outcome

PI = math.pi
PI2 = PI * PI
PATH = rod._straight_path(2001)

# alpha/pi, g_N, g^NN_ND, g_hat, g^ND_NN, g^ND_ND, Delta_max (all / pi^2)
TABLE1 = [
    (0.0, 0.0, 0.0, 0.0, 0.0, -0.25, 0.25),
    (0.3, 0.0842, 0.0732, 0.045, 0.0000, -0.1222, 0.2064),
    (0.5, 0.2137, 0.1679, 0.125, 0.0000, 0.0000, 0.2137),
    (0.7, 0.3792, 0.2820, 0.245, 0.1826, 0.1533, 0.2258),
    (1.0, 0.6717, 0.5000, 0.500, 0.5000, 0.4446, 0.2271),
    (1.3, 1.0067, 0.8197, 0.845, 0.8663, 0.8129, 0.1938),
    (1.5, 1.2549, 1.1032, 1.125, 1.1440, 1.1032, 0.1516),
    (1.7, 1.5279, 1.4334, 1.445, 1.4558, 1.4305, 0.0973),
    (2.0, 2.0000, 2.0000, 2.000, 2.0000, 1.9923, 0.0076),
    (2.5, 3.2058, 3.1274, 3.125, 3.1225, 3.1225, 0.0832),
    (3.0, 4.5759, 4.5000, 4.500, 4.5000, 4.4992, 0.0767),
    (3.5, 6.1596, 6.1248, 6.125, 6.1252, 6.1248, 0.0348),
    (4.0, 8.0000, 8.0000, 8.000, 8.0000, 7.9999, 0.0001),
]


def _collector():
    found = []

    def hook(case, alpha):
        def on_verdict(beta, verdict):
            if verdict.outcome is Outcome.NOT_WEAK:
                found.append((case, alpha, beta, verdict))
        return on_verdict
    return found, hook


@lru_cache(maxsize=None)
def bisection_sweep(cases, samples):
    found, hook = _collector()
    worst, where = 0.0, None
    t0 = time.perf_counter()
    for case in cases:
        for alpha in np.linspace(4 * PI / samples, 4 * PI, samples):
            beta = rod.borderline_bisection(case, alpha, on_verdict=hook(case, alpha))
            err = abs(beta - rod.borderline(case, alpha))
            if err > worst:
                worst, where = err, (case, float(alpha))
    return worst, where, time.perf_counter() - t0, tuple(found)


@lru_cache(maxsize=None)
def oracle_sweep():
    found = []
    mismatches, checked, skipped = [], 0, 0
    t0 = time.perf_counter()
    for case in rod.CANONICAL:
        for alpha in np.linspace(4 * PI / 20, 4 * PI, 20):
            lo = rod.g_D(alpha) - 0.5 * PI2
            hi = rod.borderline("NN/NN", alpha) + 0.5 * PI2
            g = rod.borderline(case, alpha)
            for beta in np.linspace(lo, hi, 20):
                if abs(beta - g) <= 1e-3:
                    skipped += 1
                    continue
                verdict = rod.classify_rod((alpha, beta), case)
                res = spectral.psi_negative_witness(rod.rod_problem(alpha, beta, case), PATH, n=800)
                checked += 1
                if verdict.outcome is Outcome.NOT_WEAK:
                    found.append((case, float(alpha), float(beta), verdict))
                ok = (verdict.outcome is Outcome.NOT_WEAK and res.negative) or \
                     (verdict.outcome is Outcome.STRICT_WEAK and not res.negative)
                if not ok:
                    mismatches.append((case, float(alpha), float(beta), verdict.outcome.value, res.eigenvalue))
    return checked, skipped, mismatches, time.perf_counter() - t0, tuple(found)


def test_criterion_01_table1(acceptance):
    t0 = time.perf_counter()
    rows = rod.emit_table1()
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for ref, row in zip(TABLE1, rows):
        got = [row[c] for c in rod.TABLE1_COLUMNS]
        assert got[0] == pytest.approx(ref[0])
        worst = max(worst, max(abs(g - r) for g, r in zip(got[1:], ref[1:])))
    passed = len(rows) == 13 and worst <= 1e-3 and elapsed <= 10
    acceptance(1, passed, f"13 rows, max |diff| = {worst:.2e} (pi^2 units), {elapsed:.2f} s")
    assert passed


def test_criterion_02_closed_form_vs_bisection(acceptance):
    worst, where, elapsed, _ = bisection_sweep(rod.CLOSED_FORM, 50)
    passed = worst <= 1e-6 and elapsed <= 60
    acceptance(2, passed, f"4 cases x 50 alphas, max |diff| = {worst:.2e} at {where}, {elapsed:.1f} s")
    assert passed


def test_criterion_03_transcendental_vs_bisection(acceptance):
    worst, where, elapsed, _ = bisection_sweep(rod.TRANSCENDENTAL, 30)
    passed = worst <= 1e-6 and elapsed <= 120
    acceptance(3, passed, f"4 cases x 30 alphas, max |diff| = {worst:.2e} at {where}, {elapsed:.1f} s")
    assert passed


def test_criterion_04_ordering_and_intersections(acceptance):
    bad = []
    for alpha in np.linspace(4 * PI / 400, 4 * PI, 400):
        g = {c: rod.borderline(c, alpha) for c in rod.CANONICAL}
        lo, hi = g["DD/DD"], g["NN/NN"]
        for c, v in g.items():
            if not lo - 1e-9 <= v <= hi + 1e-9:
                bad.append(("order", c, float(alpha)))
        if g["ND/ND"] > min(g["NN/ND"], g["ND/NN"]) + 1e-9:
            bad.append(("ND/ND below", float(alpha)))
    worst = 0.0
    for k in range(1, 5):
        a = k * PI
        v1, v2 = rod.borderline("ND/NN", a), rod.borderline("NN/ND", a)
        worst = max(worst, abs(v1 - v2), abs(v1 - rod.g_hat(a)), abs(v2 - rod.g_hat(a)))
    for k in range(4):
        a = (k + 0.5) * PI
        m = min(rod.borderline("ND/NN", a), rod.borderline("NN/ND", a))
        worst = max(worst, abs(m - rod.borderline("ND/ND", a)))
    passed = not bad and worst <= 1e-6
    acceptance(4, passed, f"ordering violations {len(bad)}, max intersection defect {worst:.2e}")
    assert passed


def test_criterion_05_oracle_concordance(acceptance):
    checked, skipped, mismatches, elapsed, _ = oracle_sweep()
    passed = not mismatches
    acceptance(5, passed, f"{checked} points agree ({skipped} in the 1e-3 band skipped), "
                          f"{len(mismatches)} mismatches, {elapsed:.1f} s")
    assert passed, mismatches[:5]


def test_criterion_06_certificate_soundness(acceptance):
    certs = []
    for sweep in (bisection_sweep(rod.CLOSED_FORM, 50)[3], bisection_sweep(rod.TRANSCENDENTAL, 30)[3],
                  oracle_sweep()[4]):
        certs.extend(sweep)
    worst, failures = -np.inf, []
    for case, alpha, beta, verdict in certs:
        witness = verdict.witness()
        value = second_variation(rod.rod_problem(alpha, beta, case), PATH, witness)
        worst = max(worst, value)
        if not value < 0:
            failures.append((case, alpha, beta, verdict.certificate.kind, value))
    passed = bool(certs) and not failures
    acceptance(6, passed, f"{len(certs)} NotWeakMinimizer witnesses, largest Psi = {worst:.3e}")
    assert passed, failures[:5]


def test_criterion_07_coupled_point(acceptance):
    rng = np.random.default_rng(20240607)
    disagreements = []
    for _ in range(200):
        pieces = int(rng.integers(1, 6))
        inner = np.sort(rng.uniform(0.0, 1.0, pieces - 1))
        breaks = np.concatenate([[0.0], inner, [1.0]])
        if np.any(np.diff(breaks) <= 1e-9):
            breaks = np.linspace(0.0, 1.0, pieces + 1)
        Q = PiecewiseConstant(breaks, rng.uniform(-4 * PI2, 4 * PI2, pieces))
        res = coupled_point_condition(Q)
        if res.our_holds != res.their_holds:
            disagreements.append((Q.breaks.tolist(), Q.values.tolist()))
    passed = not disagreements
    acceptance(7, passed, f"200 random profiles, {len(disagreements)} disagreements")
    assert passed, disagreements[:3]


def _pattern(path, M):
    s0, s1 = -M * math.sin(path.values[0, 0]), -M * math.sin(path.values[-1, 0])
    return ("-" if s0 < 0 else "+") + ("-" if s1 < 0 else "+")


def test_criterion_08_elastica(acceptance):
    checked, disagree, branches = 0, [], set()
    for M, K in [(1.0, 0.5), (5.0, 2.0), (20.0, 1.0), (0.5, 3.0), (12.0, 0.0), (30.0, 0.5), (2.0, 4.0),
                 (40.0, 3.0)]:
        problem = scalar.elastica_problem(M, K)
        for path in scalar.elastica_scan(M, K):
            if np.ptp(path.values) < 1e-10:
                continue
            v = scalar.classify_elastica(M, K, path)
            if v.outcome is Outcome.DEGENERATE:
                continue
            j = classify(problem, path)
            checked += 1
            above = v.diagnostics["C0_minus_2M"] > 0
            branches.add(("C0>2M" if above else "C0<2M", _pattern(path, M) if above else "any"))
            if (v.outcome is Outcome.MINIMIZER) != (j.outcome is Outcome.STRICT_WEAK) or \
                    j.outcome is Outcome.DEGENERATE:
                disagree.append((M, K, path.values[0, 0], v.outcome.value, j.outcome.value))
    constants_ok = True
    for M in (0.5, 1.0, 5.0):
        problem = scalar.elastica_problem(M, 0.0)
        for value, expected, weak in ((PI, Outcome.MINIMIZER, Outcome.STRICT_WEAK),
                                      (0.0, Outcome.NOT_MINIMIZER, Outcome.NOT_WEAK)):
            path = ExtremalPath.constant(value)
            constants_ok &= scalar.classify_elastica(M, 0.0, path).outcome is expected
            constants_ok &= classify(problem, path).outcome is weak
    needed = {("C0>2M", "-+"), ("C0<2M", "any")}
    other_sign = any(b[0] == "C0>2M" and b[1] != "-+" for b in branches)
    passed = checked >= 20 and not disagree and constants_ok and needed <= branches and other_sign
    acceptance(8, passed, f"{checked} non-constant extremals agree ({len(disagree)} disagreements), "
                          f"branches {sorted(branches)}, constants ok: {constants_ok}")
    assert passed, disagree[:5]


def _bumps(path, L):
    x = path.grid
    t = (x - x[0]) / L
    out = []
    for c, k in ((0.3, 1), (-0.5, 1), (0.4, 2), (1.0, 3)):
        out.append((path.values[:, 0] + c * np.sin(k * PI * t),
                    path.derivatives[:, 0] + c * k * PI / L * np.cos(k * PI * t)))
    return out


def test_criterion_09_double_well(acceptance):
    va, path_a = scalar.classify_double_well_length("a", 2.0, 1.0)
    lag_a = scalar.well("a").lagrangian
    pay = va.certificate.payload
    e_check = float(field.excess(lag_a, pay["x"], np.array([0.0]), np.array([pay["p"]]), np.array([pay["q"]])))
    ok_a = va.outcome is Outcome.WEAK_NOT_STRONG and pay.get("E", 0) < 0 and e_check < 0
    w = scalar.well("b")
    results, spread = {}, 0.0
    for side, m in (("above", scalar.P2 + 0.05), ("below", scalar.P2 - 0.05)):
        L = 2 * scalar.half_transit(w, m, 2.0)
        path = scalar.double_well_extremal("b", L, 2.0)
        v = scalar.classify_double_well("b", path)
        results[side] = (float(np.min(path.derivatives)), v.outcome)
        if side == "above":
            problem = scalar.double_well_problem("b", L)
            fld = scalar.double_well_global_field(problem, path)
            values = [field.hilbert_integral(fld, problem, vv) for vv in _bumps(path, L)]
            values.append(field.hilbert_integral(fld, problem, path))
            spread = (max(values) - min(values)) / (1 + abs(values[0]))
    ok_b = results["above"][1] is Outcome.GLOBAL and results["below"][1] is not Outcome.GLOBAL
    passed = ok_a and ok_b and spread <= 1e-6
    acceptance(9, passed, f"(a) {va.outcome.value} E={pay.get('E', float('nan')):.3g}; "
                          f"(b) min u'={results['above'][0]:.4f}: {results['above'][1].value}, "
                          f"min u'={results['below'][0]:.4f}: {results['below'][1].value}; "
                          f"Hilbert spread {spread:.1e}")
    assert passed


def test_criterion_10_remark_degenerate(acceptance):
    v = rod.classify_rod((3 * PI, 2 * PI2), "DD/NN")
    p = v.certificate.payload
    sizes = [abs(p[k]) for k in ("D_end", "h1_end", "h2_end", "B2_end")]
    passed = v.outcome is Outcome.DEGENERATE and max(sizes) <= 1e-7
    acceptance(10, passed, f"{v.outcome.value}, max(|D(1)|, |h1(1)|, |h2(1)|, |B2 h(1)|) = {max(sizes):.2e}")
    assert passed
