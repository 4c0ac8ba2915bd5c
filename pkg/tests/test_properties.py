import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from varstab.field import excess, excess_at
from varstab.jacobi import GridFunction, PiecewiseConstant, coupled_point_condition
from varstab.lagrangians import double_well_a, double_well_b, elastica
from varstab.rod import RodCase, reduce_case
from varstab.verdict import format_number

finite = st.floats(-5, 5, allow_nan=False)
letters = st.sampled_from("DN")


@given(finite, finite, finite, st.floats(0.1, 10), finite)
def test_elastica_excess_is_half_square(u, p, q, M, K):
    value = float(excess(elastica(M, K), 0.0, u, p, q))
    assert value >= -1e-12
    assert np.isclose(value, 0.5 * (q - p) ** 2, rtol=1e-9, atol=1e-9)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=8), st.sampled_from(["a", "b"]))
@settings(max_examples=50)
def test_polynomial_excess_minimum_is_a_lower_bound(points, variant):
    lag = double_well_a() if variant == "a" else double_well_b()
    v = np.array([pt[0] for pt in points])
    psi = np.array([pt[1] for pt in points])
    exact = excess_at(lag, np.zeros_like(v), v, psi, "global")
    q = np.linspace(-10, 10, 2001)
    brute = excess(lag, 0.0, np.broadcast_to(v[:, None, None], (len(v), len(q), 1)),
                   np.broadcast_to(psi[:, None, None], (len(v), len(q), 1)),
                   np.broadcast_to(q[None, :, None], (len(v), len(q), 1)))
    assert exact.min_value <= brute.min() + 1e-9 * (1 + abs(brute.min()))
    assert exact.min_value >= brute.min() - 0.05 * (1 + abs(brute.min()))


@given(letters, letters, letters, letters)
def test_case_reduction_idempotent(a, b, c, d):
    canon, _ = reduce_case(f"{a}{b}/{c}{d}")
    assert reduce_case(canon)[0] == canon
    assert RodCase.parse(canon.label) == canon


@given(st.floats(-1e300, 1e300))
def test_number_format_round_trips_ten_digits(x):
    y = float(format_number(x))
    assert np.isclose(y, x, rtol=1e-9, atol=0.0)


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.0, 1.0))
def test_grid_function_sum(coeffs, x):
    nodes = np.linspace(0, 1, 7)
    f = GridFunction(nodes, coeffs[0] * nodes ** 2, 2 * coeffs[0] * nodes)
    g = GridFunction(np.linspace(0, 1, 4), coeffs[1] + coeffs[2] * np.linspace(0, 1, 4),
                     np.full(4, coeffs[2]))
    s = f + g
    assert np.allclose(s(np.array([x]))[0], f(np.array([x]))[0] + g(np.array([x]))[0], atol=1e-12)


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=4), st.data())
@settings(max_examples=60, deadline=None)
def test_coupled_point_tests_agree(values, data):
    inner = sorted(data.draw(st.lists(st.floats(0.05, 0.95), min_size=len(values) - 1,
                                      max_size=len(values) - 1, unique=True)))
    breaks = np.array([0.0] + inner + [1.0])
    if np.any(np.diff(breaks) < 1e-3):
        return
    res = coupled_point_condition(PiecewiseConstant(breaks, values))
    grazing = min(abs(res.integral_Q), 1.0)
    if grazing < 1e-6:
        return
    assert res.our_holds == res.their_holds
