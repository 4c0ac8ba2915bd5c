import math

import numpy as np
import pytest

from varstab.errors import ConfigurationError
from varstab.rod import (CANONICAL, PI, PI2, RodCase, RodParams, alpha0, borderline, borderline_bisection,
                         borderline_closed_form, borderline_transcendental, branch_join_defects,
                         classify_rod, emit_diagram, emit_table1, g_D, g_DN_ND, g_hat, g_M, g_M_bounds,
                         g_ND_NN_sup_form, reduce_case)
from varstab.verdict import Outcome

ALL_CASES = [a + b + "/" + c + d for a in "DN" for b in "DN" for c in "DN" for d in "DN"]


def test_reduce_examples():
    assert reduce_case("NN/DD")[0].label == "DD/NN"
    assert reduce_case("DD/DN")[0].label == "DD/ND"
    assert reduce_case("DD/DD") == (RodCase("DD", "DD"), "identity")


@pytest.mark.parametrize("case", ALL_CASES)
def test_reduce_lands_in_canonical_set_and_is_idempotent(case):
    canon, _ = reduce_case(case)
    assert canon.label in CANONICAL
    assert reduce_case(canon) == (canon, "identity")


def test_case_parsing():
    assert RodCase.parse("nd / nn") == RodCase("ND", "NN")
    with pytest.raises(ConfigurationError):
        RodCase.parse("DX/NN")
    with pytest.raises(ConfigurationError):
        RodCase.parse("DDD/NN")


def test_physical_parameters():
    p = RodParams.physical(A=2.0, C=1.0, M=0.5, F=-4.0, L=1.0)
    assert p.alpha == pytest.approx(PI / 2) and p.beta == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        RodParams.physical(A=0.0, C=1.0, M=1.0, F=0.0)


def test_closed_form_values():
    assert g_D(2 * PI) == pytest.approx(0.0, abs=1e-12)
    assert g_M(PI) == pytest.approx(0.0, abs=1e-12)
    assert g_DN_ND(PI) == pytest.approx(PI2 / 4)
    assert borderline_closed_form("DD/ND", 3.0) == pytest.approx(9 / 4 - PI2 / 4)
    lower, upper = g_M_bounds(2 * PI)
    assert lower == pytest.approx(0.6 * PI2) and upper == pytest.approx(3 * PI2)
    assert lower <= g_M(2 * PI) <= upper


def test_closed_form_branches_join():
    for k in range(1, 4):
        a = 2 * k * PI
        assert (k - 0.5) * PI * (a - (k - 0.5) * PI) == pytest.approx((k + 0.5) * PI * (a - (k + 0.5) * PI))
        assert g_DN_ND(a - 1e-12) == pytest.approx(g_DN_ND(a), abs=1e-9)
        b = (2 * k + 1) * PI
        assert g_M(b - 1e-12) == pytest.approx(g_M(b), abs=1e-9)


def test_closed_form_rejects_nonpositive_alpha_and_wrong_case():
    with pytest.raises(ConfigurationError):
        borderline_closed_form("DD/DD", 0.0)
    with pytest.raises(ConfigurationError):
        borderline_closed_form("NN/NN", 1.0)
    with pytest.raises(ConfigurationError):
        borderline_transcendental("DD/DD", 1.0)


def test_transcendental_values():
    assert borderline_transcendental("NN/NN", 2 * PI) / PI2 == pytest.approx(2.0, abs=5e-5)
    assert borderline_transcendental("ND/ND", 2.0) == pytest.approx(1.0, abs=1e-9)
    assert borderline_transcendental("ND/NN", 0.3 * PI) / PI2 == pytest.approx(0.0, abs=5e-5)
    assert borderline_transcendental("NN/ND", PI) / PI2 == pytest.approx(0.5, abs=5e-5)


def test_branch_joins_and_alpha0():
    assert alpha0() == pytest.approx(2 * math.sin(alpha0()), abs=1e-14)
    assert max(branch_join_defects().values()) < 1e-6


def test_sup_form_cross_check():
    for a in np.linspace(0.2, alpha0() - 1e-3, 25):
        assert g_ND_NN_sup_form(a) == pytest.approx(borderline("ND/NN", a), abs=1e-6)


def test_ordering_and_intersections():
    for a in np.linspace(0.05, 4 * PI, 60):
        gs = {c: borderline(c, a) for c in CANONICAL}
        for c in CANONICAL:
            assert gs["DD/DD"] - 1e-9 <= gs[c] <= gs["NN/NN"] + 1e-9
        assert gs["ND/ND"] <= min(gs["NN/ND"], gs["ND/NN"]) + 1e-9
    for k in range(1, 5):
        a = k * PI
        assert borderline("ND/NN", a) == pytest.approx(borderline("NN/ND", a), abs=1e-6)
        assert borderline("NN/ND", a) == pytest.approx(g_hat(a), abs=1e-6)
        b = (k - 0.5) * PI
        assert min(borderline("ND/NN", b), borderline("NN/ND", b)) == pytest.approx(borderline("ND/ND", b),
                                                                                    abs=1e-6)


def test_limits():
    assert borderline("NN/NN", 0.01) / 0.01 ** 2 == pytest.approx(1.0, abs=1e-3)
    a = 4 * PI
    assert g_hat(a) - borderline("ND/ND", a) <= 1e-3 * PI2
    assert borderline("ND/ND", 0.0) == pytest.approx(-PI2 / 4)


def test_table_rows():
    rows = {r["alpha/pi"]: r for r in emit_table1()}
    assert len(rows) == 13
    assert rows[0.0]["g_ND_ND"] == pytest.approx(-0.25, abs=5e-5)
    assert rows[0.0]["delta_max"] == pytest.approx(0.25, abs=5e-5)
    # the printed table appears truncated rather than rounded in its last digit
    assert rows[1.5]["g_N"] == pytest.approx(1.2549, abs=1e-4)
    assert rows[3.0]["g_NN_ND"] == pytest.approx(4.5, abs=1e-4)


def test_classify_examples():
    assert classify_rod((2 * PI, -0.5), "DD/DD").outcome is Outcome.NOT_WEAK
    assert classify_rod((PI, 0.7 * PI2), "NN/NN").outcome is Outcome.STRICT_WEAK
    assert classify_rod((PI, 0.6 * PI2), "NN/NN").outcome is Outcome.NOT_WEAK


def test_classify_at_zero_twist():
    assert classify_rod((0.0, 0.5), "NN/NN").outcome is Outcome.STRICT_WEAK
    assert classify_rod((0.0, -0.5), "NN/NN").outcome is Outcome.NOT_WEAK


@pytest.mark.parametrize("case", ALL_CASES)
def test_verdict_invariant_under_symmetries(case):
    canon, _ = reduce_case(case)
    for alpha, beta in [(2.3, 1.0), (5.0, 3.0), (1.0, -1.0)]:
        expected = classify_rod((alpha, beta), canon).outcome
        assert classify_rod((alpha, beta), case).outcome is expected
        assert classify_rod((-alpha, beta), case).outcome is expected


@pytest.mark.parametrize("case", ["DD/NN", "NN/ND", "ND/NN"])
def test_monotone_in_beta(case):
    alpha = 4.0
    g = borderline(case, alpha)
    betas = np.linspace(g - 3, g + 3, 25)
    outcomes = [classify_rod((alpha, b), case, nodes=801).outcome for b in betas]
    # a Degenerate answer is only acceptable right at the borderline
    assert all(abs(b - g) < 1e-3 for b, o in zip(betas, outcomes) if o is Outcome.DEGENERATE)
    decided = [o for o in outcomes if o is not Outcome.DEGENERATE]
    first_stable = decided.index(Outcome.STRICT_WEAK)
    assert all(o is Outcome.NOT_WEAK for o in decided[:first_stable])
    assert all(o is Outcome.STRICT_WEAK for o in decided[first_stable:])


def test_bisection_examples():
    assert borderline_bisection("DD/DD", 3.0) == pytest.approx(9 / 4 - PI2, abs=1e-6)
    assert borderline_bisection("ND/ND", 2 * PI) / PI2 == pytest.approx(1.9923, abs=5e-4)
    assert borderline_bisection("NN/NN", 4 * PI) / PI2 == pytest.approx(8.0, abs=5e-4)


def test_bisection_bracket_validation():
    with pytest.raises(ConfigurationError):
        borderline_bisection("DD/DD", 3.0, beta_lo=5.0, beta_hi=1.0)
    with pytest.raises(ConfigurationError):
        borderline_bisection("DD/DD", 3.0, beta_lo=20.0, beta_hi=30.0)


def test_mixed_case_diagram_has_bounds():
    header, rows = emit_diagram("DD/NN", 1.0, 12.0, 12)
    assert header[-2:] == ["g_M_lower", "g_M_upper"]
    for row in rows:
        assert row[3] - 1e-9 <= row[1] <= row[4] + 1e-9


def test_diagram_units_and_validation():
    _, plain = emit_diagram("NN/NN", 2 * PI, 2 * PI, 1)
    _, scaled = emit_diagram("NN/NN", 2 * PI, 2 * PI, 1, pi2_units=True)
    assert scaled[0][1] == pytest.approx(plain[0][1] / PI2)
    with pytest.raises(ConfigurationError):
        emit_diagram("NN/NN", 0.0, 1.0, 3)
