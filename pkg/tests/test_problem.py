import math

import numpy as np
import pytest

from varstab import scalar
from varstab.errors import ConfigurationError, NumericalError
from varstab.lagrangians import CallableLagrangian, ScalarLagrangian, TwistedRodLagrangian, double_well_a, elastica
from varstab.problem import (ExtremalPath, Problem, check_extremal, check_legendre, dubois_reymond_residual,
                             eval_coeffs, node_coeffs)


def p_squared():
    return ScalarLagrangian([0, 0, 1], lambda u: 0 * u, lambda u: 0 * u, lambda u: 0 * u)


def test_eval_coeffs_quadratic():
    prob = Problem(p_squared(), 0.0, 1.0)
    c = eval_coeffs(prob, ExtremalPath.constant(0.0), np.array([0.0, 0.3, 1.0]))
    assert np.allclose(c.f_pp[:, 0, 0], 2.0)
    assert np.allclose(c.f_pu, 0.0) and np.allclose(c.f_uu, 0.0)


def test_eval_coeffs_elastica():
    M = 2.5
    prob = Problem(elastica(M, 0.3), 0.0, 1.0)
    path = ExtremalPath.from_functions(lambda x: 0.2 + x, lambda x: 1 + 0 * x, 0.0, 1.0, 101)
    c = node_coeffs(prob, path)
    assert np.allclose(c.f_pp[:, 0, 0], 1.0)
    assert np.allclose(c.f_uu[:, 0, 0], -M * np.cos(path.values[:, 0]))


def straight_rod(M=0.7, A=2.0, C=1.5, F=-3.0):
    lag = TwistedRodLagrangian(A, C, F)
    path = ExtremalPath.from_functions(
        lambda x: np.stack([np.full_like(x, math.pi / 2), 0 * x, 2 * math.pi * M * x], axis=1),
        lambda x: np.stack([0 * x, 0 * x, np.full_like(x, 2 * math.pi * M)], axis=1), 0.0, 1.0, 201)
    return Problem(lag, 0.0, 1.0, [1, 2, 3], [1, 2, 3]), path, (A, C)


def test_rod_coefficients_and_extremal():
    prob, path, (A, C) = straight_rod()
    c = node_coeffs(prob, path)
    assert np.allclose(c.f_pp[:, 0, 0], A) and np.allclose(c.f_pp[:, 1, 1], A)
    assert np.allclose(c.f_pp[:, 2, 2], C)
    assert np.allclose(c.f_pp[:, 1, 2], 0.0, atol=1e-8) and np.allclose(c.f_pp[:, 0, 1], 0.0, atol=1e-8)
    rep = check_extremal(prob, path)
    assert rep.passed and rep.euler_residual <= 1e-8


def test_symmetric_hessian_exact():
    prob, path, _ = straight_rod()
    c = node_coeffs(prob, path)
    assert np.array_equal(c.f_pp, np.swapaxes(c.f_pp, -1, -2))


def test_check_extremal_constant_pi():
    prob = Problem(elastica(1.0, 0.0), 0.0, 1.0)
    rep = check_extremal(prob, ExtremalPath.constant(math.pi))
    assert rep.passed and rep.euler_residual < 1e-12 and rep.natural_residual == 0


def test_check_extremal_natural_failure():
    prob = Problem(p_squared(), 0.0, 1.0, dirichlet_b=[1])
    path = ExtremalPath.from_functions(lambda x: x, lambda x: 1 + 0 * x, 0.0, 1.0, 51)
    rep = check_extremal(prob, path)
    assert not rep.passed and rep.natural_residual == pytest.approx(2.0)


def test_legendre_reports():
    rep = check_legendre(Problem(elastica(1.0, 0.0), 0.0, 1.0), ExtremalPath.constant(0.3))
    assert rep.c0 == pytest.approx(1.0) and rep.satisfied
    dw = Problem(double_well_a(), 0.0, 1.0)
    path = ExtremalPath.from_functions(lambda x: 0.9 * x, lambda x: 0.9 - 0.2 * x, 0.0, 1.0, 101)
    rep = check_legendre(dw, path)
    assert rep.c0 == pytest.approx(4 * (3 * 0.7 ** 2 - 1)) and rep.satisfied
    crossing = ExtremalPath.from_functions(lambda x: 0.5 * x * x, lambda x: x - 0.5, 0.0, 1.0, 101)
    rep = check_legendre(dw, crossing)
    assert rep.c0 == pytest.approx(-4.0) and not rep.satisfied


def test_dubois_reymond():
    lag = elastica(3.0, 0.5)
    path = scalar.shoot_extremal(lag, 0.0, 1.0, 1.2, 0.5)
    assert dubois_reymond_residual(Problem(lag, 0.0, 1.0), path) < 1e-6
    assert dubois_reymond_residual(Problem(lag, 0.0, 1.0), ExtremalPath.constant(0.4)) < 1e-14
    dw = scalar.double_well_extremal("a", 2.0)
    level = dw.values[:, 0] ** 2 - (3 * dw.derivatives[:, 0] ** 4 - 2 * dw.derivatives[:, 0] ** 2)
    assert np.ptp(level) < 1e-9


def test_finite_difference_fallback_matches_analytic():
    def f(x, u, p):
        return 0.5 * p[0] ** 2 * (1 + x) + math.sin(u[0]) * p[0] + u[0] ** 4

    bare = CallableLagrangian(1, f)
    full = CallableLagrangian(
        1, f,
        f_p=lambda x, u, p: np.array([p[0] * (1 + x) + math.sin(u[0])]),
        f_u=lambda x, u, p: np.array([math.cos(u[0]) * p[0] + 4 * u[0] ** 3]),
        f_pp=lambda x, u, p: np.array([[1 + x]]),
        f_pu=lambda x, u, p: np.array([[math.cos(u[0])]]),
        f_uu=lambda x, u, p: np.array([[-math.sin(u[0]) * p[0] + 12 * u[0] ** 2]]))
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, u, p = rng.uniform(0, 1), rng.uniform(-2, 2, 1), rng.uniform(-2, 2, 1)
        for name in ("f_p", "f_u", "f_pp", "f_pu", "f_uu"):
            a, b = getattr(bare, name)(x, u, p), getattr(full, name)(x, u, p)
            assert np.allclose(a, b, rtol=1e-6, atol=1e-6 * (1 + np.max(np.abs(b)))), name


def test_problem_validation():
    with pytest.raises(ConfigurationError):
        Problem(p_squared(), 1.0, 0.0)
    with pytest.raises(ConfigurationError):
        Problem(p_squared(), 0.0, 1.0, dirichlet_a=[2])
    prob = Problem(TwistedRodLagrangian(1, 1, 0), 0.0, 1.0, [1, 3], [2])
    assert prob.pinned("a") == (0, 2) and prob.free("b") == (0, 2)


def test_path_validation_and_hermite():
    with pytest.raises(ConfigurationError):
        ExtremalPath(np.array([0.0, 0.0, 1.0]), np.zeros(3), np.zeros(3))
    path = ExtremalPath.from_functions(np.sin, np.cos, 0.0, 1.0, 41)
    u, du = path(np.array([0.123, 0.777]))
    assert np.allclose(u[:, 0], np.sin([0.123, 0.777]), atol=1e-7)
    assert path.grid[0] == 0.0 and path.grid[-1] == 1.0


def test_non_finite_derivative_reports_location():
    lag = ScalarLagrangian([0, 0, 1], lambda u: np.log(u), lambda u: 1 / u, lambda u: -1 / u ** 2)
    path = ExtremalPath.from_functions(lambda x: x - 0.5, lambda x: 1 + 0 * x, 0.0, 1.0, 11)
    with np.errstate(all="ignore"), pytest.raises(NumericalError) as err:
        node_coeffs(Problem(lag, 0.0, 1.0), path)
    assert err.value.x is not None
