import math

import numpy as np
import pytest
from scipy.linalg import expm

from varstab.errors import ConfigurationError, LegendreError
from varstab.jacobi import (GridFunction, PiecewiseConstant, Tolerances, classify, coupled_point_condition,
                            endpoint_form, jacobi_first_order_rhs, jacobi_matrix, scan_determinant,
                            second_variation, solve_basis)
from varstab.lagrangians import QuadraticLagrangian
from varstab.problem import Coefficients, ExtremalPath, Problem
from varstab.rod import RodParams, classify_rod, rod_problem
from varstab.verdict import Outcome

ZERO2 = ExtremalPath.constant([0.0, 0.0])
PI2 = math.pi ** 2


def bundle(P, Q, R):
    n = len(P)
    z = np.zeros(n)
    return Coefficients(0.0, 0.0, z, z, np.asarray(P, float), np.asarray(Q, float), np.asarray(R, float))


def rod_basis(alpha, beta, case):
    prob = rod_problem(alpha, beta, case)
    return prob, solve_basis(prob, ZERO2)


def test_rhs_reproduces_rod_system():
    alpha, beta = 1.7, 0.4
    Q = np.array([[0.0, 0.0], [-alpha, 0.0]])
    c = bundle(np.eye(2), Q, beta * np.eye(2))
    h, dh = np.array([0.3, -1.1]), np.array([0.8, 0.25])
    got_dh, dw = jacobi_first_order_rhs(c, h, dh + Q @ h)
    assert np.allclose(got_dh, dh)
    d2h = dw - Q @ dh
    assert np.allclose(d2h, [beta * h[0] - alpha * dh[1], beta * h[1] + alpha * dh[0]])


def test_rhs_scalar_and_zero_state():
    c = bundle([[1.0]], [[0.0]], [[2.5]])
    dh, dw = jacobi_first_order_rhs(c, [0.4], [1.5])
    assert dh == pytest.approx([1.5]) and dw == pytest.approx([2.5 * 0.4])
    dh, dw = jacobi_first_order_rhs(c, [0.0], [0.0])
    assert not dh.any() and not dw.any()


def test_rhs_singular_leading_block():
    with pytest.raises(LegendreError):
        jacobi_first_order_rhs(bundle([[0.0]], [[0.0]], [[1.0]]), [1.0], [1.0])


def test_free_start_with_zero_potential_is_constant():
    prob = Problem(QuadraticLagrangian([[1.0]]), 0.0, 1.0)
    basis = solve_basis(prob, ExtremalPath.constant(0.0))
    assert np.allclose(basis.h[:, 0, 0], 1.0) and np.allclose(basis.w, 0.0)
    assert basis.pattern == ("N",)


@pytest.mark.parametrize("case", ["NN/NN", "DD/ND", "DN/ND", "DD/DD"])
@pytest.mark.parametrize("alpha,beta", [(2.0, 3.0), (5.0, 1.0), (1.0, -2.0)])
def test_basis_matches_matrix_exponential(case, alpha, beta):
    prob, basis = rod_basis(alpha, beta, case)
    Q = np.array([[0.0, 0.0], [-alpha, 0.0]])
    J = jacobi_matrix(np.eye(2), Q, beta * np.eye(2))
    y0 = np.vstack([basis.h[0], basis.w[0]])
    exact = expm(J) @ y0
    scale = math.exp(basis.log_scale)
    got = np.vstack([basis.h[-1], basis.w[-1]]) * scale
    assert np.max(np.abs(got - exact)) <= 1e-8 * max(1.0, np.max(np.abs(exact)))


def test_pinned_start_data():
    _, basis = rod_basis(1.0, 1.0, "DN/ND")
    assert basis.pattern == ("D", "N")
    assert np.allclose(basis.h[0], [[0, 0], [0, 1]]) and np.allclose(basis.w[0], [[1, 0], [0, 0]])


@pytest.mark.parametrize("alpha", [3.0, 5.0, 8.0])
def test_one_pinned_one_free_root_rule(alpha):
    border = 0.25 * (alpha ** 2 - PI2)
    _, below = rod_basis(alpha, border - 0.05, "DD/ND")
    _, above = rod_basis(alpha, border + 0.05, "DD/ND")
    below_scan, above_scan = scan_determinant(below), scan_determinant(above)
    assert below_scan.roots and not above_scan.roots
    root = math.pi / math.sqrt(alpha ** 2 - 4 * (border - 0.05))
    assert below_scan.roots[0] == pytest.approx(root, abs=1e-7)


@pytest.mark.parametrize("alpha", [1.0, 2.5, 4.0])
def test_free_start_at_half_square_has_constant_determinant(alpha):
    _, basis = rod_basis(alpha, 0.5 * alpha ** 2, "NN/NN")
    D = basis.determinant()
    assert np.ptp(D / D[0]) < 1e-7
    assert not scan_determinant(basis).roots


@pytest.mark.parametrize("alpha,expect_root", [(3.0, True), (1.5, False), (2.4, True)])
def test_free_start_at_quarter_square(alpha, expect_root):
    _, basis = rod_basis(alpha, 0.25 * alpha ** 2, "NN/NN")
    roots = scan_determinant(basis).roots
    assert bool(roots) is expect_root
    if expect_root:
        assert roots[0] == pytest.approx(2.0 / alpha, abs=1e-7)


def test_root_set_unchanged_by_recombination():
    _, basis = rod_basis(3.0, 0.25 * 9.0 - 0.3, "NN/NN")
    T = np.array([[2.0, 0.7], [-0.4, 1.3]])
    r1 = scan_determinant(basis).roots
    r2 = scan_determinant(basis.recombined(T)).roots
    assert len(r1) == len(r2) and np.allclose(r1, r2, atol=1e-9)


def test_endpoint_form_symmetric_and_negative_at_half_square():
    prob, basis = rod_basis(2.0, 2.0, "NN/NN")
    form = endpoint_form(basis, prob)
    assert form.asymmetry < 1e-8
    assert form.eigenvalue < 0


def test_endpoint_form_sign_rule_above_quarter_square():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(40):
        alpha = rng.uniform(0.5, 9.0)
        beta = rng.uniform(0.5 * alpha ** 2 + 0.05, alpha ** 2)
        p = RodParams(alpha, beta)
        g, theta = p.gamma, p.theta
        rule = (1 - theta ** 2) * math.cosh(2 * g) + theta ** 2 * math.cos(2 * p.delta) - 1
        if g <= p.delta or abs(rule) < 1e-3:
            continue
        prob, basis = rod_basis(alpha, beta, "NN/NN")
        assert (endpoint_form(basis, prob).eigenvalue > 0) == (rule > 0)
        checked += 1
    assert checked >= 10


def test_endpoint_form_skipped_when_right_end_pinned():
    prob, basis = rod_basis(2.0, 1.0, "DD/DD")
    v = classify(prob, ZERO2)
    assert np.isnan(v.eig_A)


def test_classify_examples():
    assert classify_rod((2 * math.pi, 0.1), "DD/DD").outcome is Outcome.STRICT_WEAK
    assert classify_rod((2.5, 0.5 * 2.5 ** 2), "NN/NN").outcome is Outcome.NOT_WEAK
    for case in ["DD/DD", "DD/NN", "ND/NN", "NN/ND", "NN/NN", "ND/ND", "DN/ND", "DD/ND"]:
        assert classify_rod((3.3, 3.3 ** 2 + 0.5), case).outcome is Outcome.STRICT_WEAK


def test_not_weak_certificates_have_negative_second_variation():
    for alpha, beta, case in [(2.5, 3.125, "NN/NN"), (2 * math.pi, -0.5, "DD/DD"), (3.0, -1.0, "DD/ND"),
                              (5.0, 4.0, "ND/ND")]:
        prob = rod_problem(alpha, beta, case)
        v = classify(prob, ZERO2)
        assert v.outcome is Outcome.NOT_WEAK
        assert second_variation(prob, ZERO2, v.witness()) < 0


def test_second_variation_at_zero():
    prob = rod_problem(2.0, 1.0, "NN/NN")
    zero = GridFunction(np.linspace(0, 1, 11), np.zeros((11, 2)), np.zeros((11, 2)))
    assert second_variation(prob, ZERO2, zero) == 0.0


def test_second_variation_equals_boundary_term_on_jacobi_solutions():
    rng = np.random.default_rng(11)
    for alpha, beta in [(2.0, 2.0), (3.0, 1.0), (1.0, 4.0)]:
        prob, basis = rod_basis(alpha, beta, "NN/NN")
        xi = rng.normal(size=2)
        h = basis.combination(xi)
        hb, wb = basis.h[-1] @ xi, basis.w[-1] @ xi
        ha, wa = basis.h[0] @ xi, basis.w[0] @ xi
        boundary = wb @ hb - wa @ ha
        assert second_variation(prob, ZERO2, h) == pytest.approx(boundary, rel=1e-6, abs=1e-9)


def test_second_variation_rejects_constraint_violation():
    prob = rod_problem(1.0, 1.0, "DD/DD")
    h = GridFunction(np.linspace(0, 1, 5), np.ones((5, 2)), np.zeros((5, 2)))
    with pytest.raises(ConfigurationError):
        second_variation(prob, ZERO2, h)


def test_classify_requires_extremal():
    prob = Problem(QuadraticLagrangian([[1.0]], None, [[1.0]]), 0.0, 1.0)
    path = ExtremalPath.from_functions(lambda x: 1 + x, lambda x: 1 + 0 * x, 0.0, 1.0, 101)
    with pytest.raises(ConfigurationError):
        classify(prob, path)


def test_tolerance_validation():
    with pytest.raises(ConfigurationError):
        Tolerances(degenerate=-1.0)


def test_coupled_point_positive_constant():
    res = coupled_point_condition(PiecewiseConstant([0.0, 1.0], [2.0]))
    assert res.our_holds and res.their_holds
    res = coupled_point_condition(lambda x: 2.0)
    assert res.our_holds and res.their_holds


def test_coupled_point_negative_constant():
    res = coupled_point_condition(PiecewiseConstant([0.0, 1.0], [-PI2]))
    assert not res.our_holds and not res.their_holds
    assert res.first_zero_h == pytest.approx(0.5, abs=1e-9)


def test_coupled_point_equivalence_random_steps():
    rng = np.random.default_rng(5)
    agree = 0
    for _ in range(200):
        k = int(rng.integers(1, 5))
        breaks = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, k - 1)), [1.0]])
        Q = PiecewiseConstant(breaks, rng.uniform(-15, 15, k))
        res = coupled_point_condition(Q)
        assert res.our_holds == res.their_holds
        agree += res.our_holds
    assert 0 < agree < 200
