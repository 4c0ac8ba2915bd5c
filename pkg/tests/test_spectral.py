import math

import numpy as np
import pytest

from varstab.errors import ConfigurationError
from varstab.jacobi import scan_determinant, second_variation, solve_basis
from varstab.lagrangians import QuadraticLagrangian
from varstab.problem import ExtremalPath, Problem
from varstab.rod import g_D, rod_problem
from varstab.spectral import discretize, lambda1, psi_negative_witness

ZERO2 = ExtremalPath.constant([0.0, 0.0])


@pytest.mark.parametrize("alpha,beta,case", [(2.0, 1.0, "NN/NN"), (3.0, -5.0, "DD/DD"), (6.0, 9.0, "ND/NN")])
def test_lambda1_near_left_end(alpha, beta, case):
    assert lambda1(rod_problem(alpha, beta, case), ZERO2, 0.01) > 0.9


def test_lambda1_nonincreasing():
    prob = rod_problem(4.0, -3.0, "DD/DD")
    values = [lambda1(prob, ZERO2, y, n=400) for y in np.linspace(0.1, 1.0, 10)]
    assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))


def test_lambda1_detects_conjugate_point():
    alpha = 2 * math.pi
    unstable = rod_problem(alpha, g_D(alpha) - 1.0, "DD/DD")
    stable = rod_problem(alpha, g_D(alpha) + 1.0, "DD/DD")
    assert lambda1(unstable, ZERO2) < 0 < lambda1(stable, ZERO2)


def test_lambda1_sign_agrees_with_determinant_roots():
    rng = np.random.default_rng(2)
    for _ in range(12):
        alpha = rng.uniform(0.5, 12.0)
        beta = g_D(alpha) + rng.uniform(-4.0, 4.0)
        if abs(beta - g_D(alpha)) < 0.05:
            continue
        prob = rod_problem(alpha, beta, "DD/DD")
        has_root = bool(scan_determinant(solve_basis(prob, ZERO2)).roots)
        assert (lambda1(prob, ZERO2) > 0) == (not has_root)


def test_witness_at_half_square():
    alpha = 2.5
    prob = rod_problem(alpha, 0.5 * alpha ** 2, "NN/NN")
    res = psi_negative_witness(prob, ZERO2)
    assert res.negative and res.eigenvalue < 0
    assert second_variation(prob, ZERO2, res.witness) < 0


@pytest.mark.parametrize("case", ["DD/DD", "DD/NN", "NN/NN", "ND/NN", "NN/ND"])
def test_no_witness_above_square(case):
    alpha = 3.0
    res = psi_negative_witness(rod_problem(alpha, alpha ** 2 + 0.5, case), ZERO2)
    assert not res.negative and res.eigenvalue > 0


def test_free_quadratic_has_zero_mode_only():
    prob = Problem(QuadraticLagrangian([[2.0]]), 0.0, 1.0)
    res = psi_negative_witness(prob, ExtremalPath.constant(0.0))
    assert res.eigenvalue == 0.0 and res.witness is None


def test_discretize_rejects_bad_arguments():
    prob = rod_problem(1.0, 1.0, "DD/DD")
    with pytest.raises(ConfigurationError):
        discretize(prob, ZERO2, y=0.0)
    with pytest.raises(ConfigurationError):
        discretize(prob, ZERO2, n=1)
