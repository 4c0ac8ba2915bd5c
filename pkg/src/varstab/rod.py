"""Stability of a twisted, end-loaded elastic rod.

After reduction, the second variation about the straight twisted state is

    Psi(h) = int |h'|^2 - 2 alpha h_2' h_1 + beta |h|^2 dx   on [0, 1]

with alpha = 2 pi C M / A and beta = -F L^2 / A.  For each of the 16 endpoint
patterns of the two transverse components there is a borderline g(alpha):
the straight rod is a strict weak minimizer for beta > g(alpha) and not a
weak minimizer for beta < g(alpha).  Four borderlines have closed forms, the
other four are roots of transcendental equations; the remaining eight follow
by symmetry.

Case labels read ``top/bottom``: the top pair gives the constraint of
component 1 at x=0 and x=1, the bottom pair that of component 2, each
letter 'D' (pinned) or 'N' (free).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import optimize

from .errors import ConfigurationError, NumericalError
from .jacobi import Tolerances, classify
from .lagrangians import reduced_rod_lagrangian
from .problem import DEFAULT_NODES, ExtremalPath, Problem
from .verdict import Outcome, Verdict

PI = math.pi
PI2 = PI * PI

CANONICAL = ("DD/DD", "DD/ND", "DN/ND", "DD/NN", "ND/ND", "NN/ND", "ND/NN", "NN/NN")
CLOSED_FORM = CANONICAL[:4]
TRANSCENDENTAL = CANONICAL[4:]

SCAN_SAMPLES = 400
BETA_XTOL = 1e-11
JOIN_TOL = 1e-6


class BorderlineError(NumericalError):
    """A root that the theory guarantees was not found in its interval."""

    def __init__(self, message: str, trace: str = ""):
        super().__init__(message + (f"\n{trace}" if trace else ""), None)
        self.trace = trace


# ---------------------------------------------------------------------------
# parameters and cases


@dataclass(frozen=True)
class RodParams:
    """Reduced twist ``alpha`` and load ``beta``; derived quantities are computed on access."""

    alpha: float
    beta: float

    @classmethod
    def physical(cls, A: float, C: float, M: float, F: float, L: float = 1.0) -> "RodParams":
        """Bending stiffness A, torsional stiffness C, twist M, end force F, length L."""
        if A <= 0 or C <= 0 or L <= 0:
            raise ConfigurationError("A, C and L must be positive")
        return cls(2 * PI * C * M / A, -F * L * L / A)

    @property
    def gamma(self) -> float:
        return math.sqrt(abs(self.beta - 0.25 * self.alpha ** 2))

    @property
    def delta(self) -> float:
        return 0.5 * self.alpha

    @property
    def theta(self) -> float:
        g, d = self.gamma, self.delta
        return 2 * g * d / (g * g + d * d) if g or d else 0.0

    @property
    def xi(self) -> tuple[float, float]:
        return -0.5 * self.alpha + self.gamma, -0.5 * self.alpha - self.gamma


@dataclass(frozen=True)
class RodCase:
    top: str
    bottom: str

    def __post_init__(self):
        for row in (self.top, self.bottom):
            if len(row) != 2 or set(row) - {"D", "N"}:
                raise ConfigurationError(f"bad rod case row {row!r}; expected two of D/N")

    @classmethod
    def parse(cls, text: "str | RodCase") -> "RodCase":
        if isinstance(text, RodCase):
            return text
        letters = "".join(ch for ch in str(text).upper() if ch in "DN")
        cleaned = str(text).upper().replace("/", "").replace(" ", "")
        if len(letters) != 4 or len(cleaned) != 4:
            raise ConfigurationError(f"cannot parse rod case {text!r}; use e.g. 'DD/NN'")
        return cls(letters[:2], letters[2:])

    @property
    def label(self) -> str:
        return f"{self.top}/{self.bottom}"

    def __str__(self) -> str:
        return self.label

    def pinned(self, end: int) -> tuple[int, ...]:
        """1-based transverse components pinned at end 0 or 1."""
        return tuple(k + 1 for k, row in enumerate((self.top, self.bottom)) if row[end] == "D")

    @property
    def swap_allowed(self) -> bool:
        """Exchanging the components is a symmetry only if both ends pin something."""
        return bool(self.pinned(0)) and bool(self.pinned(1))

    def reversed(self) -> "RodCase":
        return RodCase(self.top[::-1], self.bottom[::-1])

    def swapped(self) -> "RodCase":
        return RodCase(self.bottom, self.top)


def reduce_case(case: "RodCase | str") -> tuple[RodCase, str]:
    """Canonical representative and the transformation reaching it.

    Both generators (x -> 1-x, and h_1 <-> h_2 when allowed) flip the sign of
    alpha, which the reflection h_1 -> -h_1 flips back, so the borderline is
    shared across the whole orbit.
    """
    case = RodCase.parse(case)
    seen = {case.label: ""}
    queue = [case]
    while queue:
        cur = queue.pop(0)
        path = seen[cur.label]
        if cur.label in CANONICAL:
            return cur, path or "identity"
        moves = [("reverse", cur.reversed())]
        if cur.swap_allowed:
            moves.append(("swap", cur.swapped()))
        for name, nxt in moves:
            if nxt.label not in seen:
                seen[nxt.label] = f"{path}+{name}" if path else name
                queue.append(nxt)
    raise AssertionError(f"no canonical representative for {case.label}")


# ---------------------------------------------------------------------------
# closed-form borderlines


def _positive(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise ConfigurationError(f"borderline functions need alpha > 0, got {alpha}")
    return alpha


def g_D(alpha: float) -> float:
    return 0.25 * alpha * alpha - PI2


def g_DD_ND(alpha: float) -> float:
    return 0.25 * alpha * alpha - 0.25 * PI2


def _branch(formula: Callable[[int], float], k: int, lo: float, hi: float, alpha: float) -> float:
    value = formula(k)
    for j, edge in ((k - 1, lo), (k + 1, hi)):
        if j >= 0 and alpha == edge:
            other = formula(j)
            assert abs(other - value) <= 1e-9 * (1 + abs(value)), "branch mismatch at a join"
    return value


def g_DN_ND(alpha: float) -> float:
    k = int(alpha // (2 * PI))
    return _branch(lambda j: (j + 0.5) * PI * (alpha - (j + 0.5) * PI), k,
                   2 * k * PI, 2 * (k + 1) * PI, alpha)


def g_M(alpha: float) -> float:
    k = int((alpha + PI) // (2 * PI))
    return _branch(lambda j: j * PI * (alpha - j * PI), k,
                   (2 * k - 1) * PI, (2 * k + 1) * PI, alpha)


def g_M_bounds(alpha: float) -> tuple[float, float]:
    """Known lower and upper estimates for the mixed-case borderline."""
    a2 = alpha * alpha
    return PI2 * (a2 - PI2) / (a2 + PI2), max(0.0, a2 - PI2)


_CLOSED = {"DD/DD": g_D, "DD/ND": g_DD_ND, "DN/ND": g_DN_ND, "DD/NN": g_M}


def borderline_closed_form(case: "RodCase | str", alpha: float) -> float:
    canon, _ = reduce_case(case)
    if canon.label not in _CLOSED:
        raise ConfigurationError(f"case {canon.label} has no closed-form borderline")
    return _CLOSED[canon.label](_positive(alpha))


# ---------------------------------------------------------------------------
# transcendental borderlines
#
# All equations are written in forms that stay regular where gamma -> 0
# (beta -> alpha^2/4), where the textbook forms carry a spurious root.


def _shc(z):
    """sinh(z)/z, regular at 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 + z * z / 6, np.sinh(safe) / safe)


def _sc(z):
    """sin(z)/z, regular at 0."""
    return np.sinc(np.asarray(z, dtype=float) / PI)


def _gamma2(alpha: float, beta):
    """Signed beta - alpha^2/4: gamma^2 above the split, -gamma^2 below it."""
    return np.asarray(beta, dtype=float) - 0.25 * alpha * alpha


def _C(alpha: float, beta):
    """sinh(2g)/(2g) above beta = alpha^2/4, sin(2g)/(2g) below, g = gamma."""
    s = _gamma2(alpha, beta)
    g = np.sqrt(np.abs(s))
    return np.where(s >= 0, _shc(2 * g), _sc(2 * g))


def _S(alpha: float, beta):
    """(sinh g / g)^2 above beta = alpha^2/4, (sin g / g)^2 below."""
    s = _gamma2(alpha, beta)
    g = np.sqrt(np.abs(s))
    return np.where(s >= 0, _shc(g) ** 2, _sc(g) ** 2)


def F_N(alpha: float, beta):
    """(1 - theta^2) cosh(2 gamma) + theta^2 cos(2 delta) - 1 for beta >= alpha^2/4."""
    g2 = np.maximum(_gamma2(alpha, beta), 0.0)
    d2 = 0.25 * alpha * alpha
    theta2 = 4 * g2 * d2 / (g2 + d2) ** 2
    sh = np.sinh(np.sqrt(g2)) ** 2
    sn = math.sin(0.5 * alpha) ** 2
    # cosh 2g - 1 = 2 sinh^2 g and cos 2d - 1 = -2 sin^2 d
    return 2 * sh - theta2 * (2 * sh + 2 * sn)


def F_ND_ND(alpha: float, beta):
    """((alpha^2 - 2 beta) cosh(2 gamma) - 2 beta) / (beta - alpha^2/4), continued below."""
    return 2 * (alpha * alpha - 2 * np.asarray(beta, dtype=float)) * _S(alpha, beta) - 4


def F_NN_ND(alpha: float, beta):
    """((gamma^2 - delta^2) sinh(2 gamma) - 2 gamma delta sin(2 delta)) / gamma."""
    b = np.asarray(beta, dtype=float)
    return 2 * (b - 0.5 * alpha * alpha) * _C(alpha, b) - alpha * math.sin(alpha)


def F_ND_NN(alpha: float, beta):
    """((gamma^2 - delta^2) sinh(2 gamma) + 2 gamma delta sin(2 delta)) / gamma.

    Below beta = alpha^2/4 this equals
    (xi1^2 sin xi2 cos xi1 - xi2^2 sin xi1 cos xi2) / gamma with
    xi = -alpha/2 +- gamma.
    """
    b = np.asarray(beta, dtype=float)
    return 2 * (b - 0.5 * alpha * alpha) * _C(alpha, b) + alpha * math.sin(alpha)


def xi_condition(alpha: float, beta: float) -> float:
    """xi1^2 sin xi2 cos xi1 - xi2^2 sin xi1 cos xi2 for beta < alpha^2/4."""
    g = math.sqrt(max(0.25 * alpha * alpha - beta, 0.0))
    x1, x2 = -0.5 * alpha + g, -0.5 * alpha - g
    return x1 * x1 * math.sin(x2) * math.cos(x1) - x2 * x2 * math.sin(x1) * math.cos(x2)


@lru_cache(maxsize=1)
def alpha0() -> float:
    """Positive root of alpha = 2 sin(alpha), by Newton from 1.885."""
    a = 1.885
    for _ in range(50):
        step = (a - 2 * math.sin(a)) / (1 - 2 * math.cos(a))
        a -= step
        if abs(step) < 1e-15:
            break
    return a


def _scan(F: Callable, lo: float, hi: float, samples: int = SCAN_SAMPLES):
    grid = np.linspace(lo, hi, samples + 1)
    vals = np.asarray(F(grid), dtype=float)
    sign = np.sign(vals)
    brackets = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    return grid, vals, brackets


def _trace(name: str, grid, vals) -> str:
    step = max(1, len(grid) // 8)
    pts = ", ".join(f"({g:.6g}, {v:.3g})" for g, v in zip(grid[::step], vals[::step]))
    return f"{name} scan samples: {pts}"


def _refine(F: Callable, a: float, b: float) -> float:
    return float(optimize.brentq(lambda t: float(F(t)), a, b, xtol=BETA_XTOL,
                                 rtol=8 * np.finfo(float).eps))


def _first_root(F: Callable, lo: float, hi: float, name: str) -> float:
    """Smallest root in [lo, hi]; lo itself when F(lo) >= 0 (stable side reached)."""
    grid, vals, brackets = _scan(F, lo, hi)
    if vals[0] >= 0:
        return float(lo)
    if len(brackets) == 0:
        hits = np.flatnonzero(vals == 0)
        if len(hits):
            return float(grid[hits[0]])
        raise BorderlineError(f"{name}: no root in [{lo:.10g}, {hi:.10g}]", _trace(name, grid, vals))
    i = brackets[0]
    hits = np.flatnonzero(vals[: i + 1] == 0)
    if len(hits):
        return float(grid[hits[0]])
    return _refine(F, grid[i], grid[i + 1])


def _last_root(F: Callable, lo: float, hi: float, name: str) -> float:
    grid, vals, brackets = _scan(F, lo, hi)
    if len(brackets) == 0:
        raise BorderlineError(f"{name}: no root in ({lo:.10g}, {hi:.10g})", _trace(name, grid, vals))
    i = brackets[-1]
    return _refine(F, grid[i], grid[i + 1])


@lru_cache(maxsize=4096)
def g_N(alpha: float) -> float:
    a2 = alpha * alpha
    return _first_root(lambda b: F_N(alpha, b), 0.5 * a2, a2, "g_N")


@lru_cache(maxsize=4096)
def g_ND_ND(alpha: float) -> float:
    a2 = alpha * alpha
    if alpha == 2.0:
        return 0.25 * a2
    if alpha > 2:
        lo, hi = 0.25 * a2, 0.5 * a2
    else:
        lo, hi = 0.25 * (a2 - PI2), 0.25 * a2
    return _last_root(lambda b: F_ND_ND(alpha, b), lo, hi, "g_ND_ND")


@lru_cache(maxsize=4096)
def g_NN_ND(alpha: float) -> float:
    a2 = alpha * alpha
    start = 0.5 * a2 if alpha <= PI else g_ND_ND(alpha)
    return _first_root(lambda b: F_NN_ND(alpha, b), start, a2, "g_NN_ND")


def _g_ND_NN_middle(alpha: float) -> float:
    """Branch alpha in (pi/2, alpha0): root below alpha^2/4."""
    a2 = alpha * alpha
    return _first_root(lambda b: F_ND_NN(alpha, b), g_ND_ND(alpha), 0.25 * a2, "g_ND_NN")


def _g_ND_NN_upper(alpha: float) -> float:
    """Branch alpha >= alpha0: root at or above alpha^2/4."""
    a2 = alpha * alpha
    start = max(g_ND_ND(alpha), 0.25 * a2)
    return _first_root(lambda b: F_ND_NN(alpha, b), start, a2, "g_ND_NN")


@lru_cache(maxsize=4096)
def g_ND_NN(alpha: float) -> float:
    if alpha <= 0.5 * PI:
        return 0.0
    if alpha < alpha0():
        return _g_ND_NN_middle(alpha)
    return _g_ND_NN_upper(alpha)


def g_ND_NN_sup_form(alpha: float) -> float:
    """Alternative characterization on (0, alpha0): the last sign change of the
    xi-condition below alpha^2/4 (cross-check for the middle branch)."""
    a2 = alpha * alpha
    lo = min(g_ND_ND(alpha), 0.0) - 1.0
    return _last_root(lambda b: F_ND_NN(alpha, b), lo, 0.25 * a2 * (1 - 1e-9), "g_ND_NN sup form")


def g_hat(alpha: float) -> float:
    return 0.5 * alpha * alpha


_TRANSCENDENTAL = {"ND/ND": g_ND_ND, "NN/ND": g_NN_ND, "ND/NN": g_ND_NN, "NN/NN": g_N}

# values as alpha -> 0+
_LIMIT_AT_ZERO = {"DD/DD": -PI2, "DD/ND": -0.25 * PI2, "DN/ND": -0.25 * PI2, "DD/NN": 0.0,
                  "ND/ND": -0.25 * PI2, "NN/ND": 0.0, "ND/NN": 0.0, "NN/NN": 0.0}


def borderline_transcendental(case: "RodCase | str", alpha: float) -> float:
    canon, _ = reduce_case(case)
    if canon.label not in _TRANSCENDENTAL:
        raise ConfigurationError(f"case {canon.label} has a closed-form borderline")
    return _TRANSCENDENTAL[canon.label](_positive(alpha))


def borderline(case: "RodCase | str", alpha: float) -> float:
    """Borderline from the formulas; alpha = 0 gives the limit from the right."""
    canon, _ = reduce_case(case)
    alpha = abs(float(alpha))
    if alpha == 0:
        return _LIMIT_AT_ZERO[canon.label]
    if canon.label in _CLOSED:
        return _CLOSED[canon.label](alpha)
    return _TRANSCENDENTAL[canon.label](alpha)


def branch_join_defects() -> dict[str, float]:
    """Jumps between the branch formulas at their joins (all should vanish)."""
    out = {}
    eps = 1e-7
    out["ND/ND at alpha=2"] = max(abs(g_ND_ND(2 - eps) - 1.0), abs(g_ND_ND(2 + eps) - 1.0))
    a0 = alpha0()
    out["ND/NN at alpha0"] = max(abs(_g_ND_NN_middle(a0 - eps) - 0.25 * a0 * a0),
                                 abs(_g_ND_NN_upper(a0) - 0.25 * a0 * a0))
    out["ND/NN at pi/2"] = abs(_g_ND_NN_middle(0.5 * PI + eps))
    return out


# ---------------------------------------------------------------------------
# classification through the generic Jacobi machinery


def rod_problem(alpha: float, beta: float, case: "RodCase | str") -> Problem:
    case = RodCase.parse(case)
    return Problem(reduced_rod_lagrangian(alpha, beta), 0.0, 1.0, case.pinned(0), case.pinned(1))


@lru_cache(maxsize=8)
def _straight_path(nodes: int) -> ExtremalPath:
    return ExtremalPath.constant([0.0, 0.0], 0.0, 1.0, nodes)


def classify_rod(params: "RodParams | tuple[float, float]", case: "RodCase | str",
                 tolerances: Tolerances = Tolerances(), nodes: int = DEFAULT_NODES) -> Verdict:
    """Weak-minimizer verdict for the straight twisted rod.

    The axial component is pinned at both ends and enters the second
    variation only through int C h_3'^2, which is positive definite there, so
    only the two transverse components are analysed.
    """
    if not isinstance(params, RodParams):
        params = RodParams(*params)
    case = RodCase.parse(case)
    alpha, beta = float(params.alpha), float(params.beta)
    notes = [f"case {case.label}", "axial component pinned at both ends: its block is positive definite"]
    if alpha < 0:
        # h_1 -> -h_1 maps the problem for -alpha onto the one for alpha
        alpha = -alpha
        notes.append("alpha < 0 mapped to |alpha| by reflecting the first component")
    elif alpha == 0:
        notes.append("alpha = 0: components decouple")
    verdict = classify(rod_problem(alpha, beta, case), _straight_path(nodes), tolerances)
    return verdict.with_trail(*notes)


EXACT = Tolerances(degenerate=0.0, dip=0.0)


def borderline_bisection(case: "RodCase | str", alpha: float, beta_lo: float | None = None,
                         beta_hi: float | None = None, tol: float = 1e-8,
                         tolerances: Tolerances = Tolerances(),
                         on_verdict: Callable[[float, Verdict], None] | None = None,
                         nodes: int = DEFAULT_NODES) -> float:
    """Stability borderline located by bisection on beta with the generic classifier.

    The default bracket [g_D - 1, alpha^2 + 1] is valid for every case since
    all borderlines lie between g_D and alpha^2.  A Degenerate midpoint is
    re-examined with zero tolerances; if it stays Degenerate the midpoint is
    the borderline to machine precision and is returned.
    """
    alpha = abs(float(alpha))
    lo = g_D(alpha) - 1.0 if beta_lo is None else float(beta_lo)
    hi = alpha * alpha + 1.0 if beta_hi is None else float(beta_hi)
    if not lo < hi:
        raise ConfigurationError("bisection bracket needs beta_lo < beta_hi")

    def judge(beta: float) -> Outcome:
        v = classify_rod((alpha, beta), case, tolerances, nodes)
        out = v.outcome
        if out is Outcome.DEGENERATE:
            # the zero-tolerance answer only steers the bisection; it is not
            # a certified verdict, so the reported one stays Degenerate
            out = classify_rod((alpha, beta), case, EXACT, nodes).outcome
            v = v.with_trail(f"zero-tolerance re-check: {out.value}")
        if on_verdict is not None:
            on_verdict(beta, v)
        return out

    if judge(lo) is not Outcome.NOT_WEAK:
        raise ConfigurationError(f"bracket invalid: beta_lo={lo:.10g} is not unstable")
    if judge(hi) is not Outcome.STRICT_WEAK:
        raise ConfigurationError(f"bracket invalid: beta_hi={hi:.10g} is not stable")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        out = judge(mid)
        if out is Outcome.NOT_WEAK:
            lo = mid
        elif out is Outcome.STRICT_WEAK:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# tables and diagrams

TABLE1_ALPHAS = (0.0, 0.3, 0.5, 0.7, 1.0, 1.3, 1.5, 1.7, 2.0, 2.5, 3.0, 3.5, 4.0)
TABLE1_COLUMNS = ("alpha/pi", "g_N", "g_NN_ND", "g_hat", "g_ND_NN", "g_ND_ND", "delta_max")


def emit_table1(alphas: Iterable[float] = TABLE1_ALPHAS) -> list[dict[str, float]]:
    """Borderlines of the free-left cases in units of pi^2, one row per alpha/pi."""
    rows = []
    for a_pi in alphas:
        alpha = a_pi * PI
        gn = borderline("NN/NN", alpha)
        gndnd = borderline("ND/ND", alpha)
        rows.append({
            "alpha/pi": a_pi,
            "g_N": gn / PI2,
            "g_NN_ND": borderline("NN/ND", alpha) / PI2,
            "g_hat": g_hat(alpha) / PI2,
            "g_ND_NN": borderline("ND/NN", alpha) / PI2,
            "g_ND_ND": gndnd / PI2,
            "delta_max": (gn - gndnd) / PI2,
        })
    return rows


def format_table1(rows: list[dict[str, float]]) -> str:
    head = " ".join(f"{c:>9}" for c in TABLE1_COLUMNS)
    lines = [head]
    for r in rows:
        cells = [f"{r['alpha/pi']:>9.1f}"] + [f"{r[c]:>9.4f}" for c in TABLE1_COLUMNS[1:]]
        lines.append(" ".join(cells))
    return "\n".join(lines)


def emit_diagram(case: "RodCase | str", alpha_min: float, alpha_max: float, samples: int,
                 method: str = "formula", pi2_units: bool = False,
                 tolerances: Tolerances = Tolerances()) -> tuple[list[str], list[list[float]]]:
    """Samples of the borderline over an alpha range, plus companion curves.

    ``method`` is 'formula' (closed form or transcendental as appropriate),
    'closed', 'transcendental' or 'bisect'.  For the mixed case the two known
    estimates are added and the sandwich between them is checked.
    """
    canon, _ = reduce_case(case)
    if not 0 < alpha_min <= alpha_max:
        raise ConfigurationError("alpha range must be positive and ordered")
    if samples < 1:
        raise ConfigurationError("samples must be at least 1")
    solvers = {
        "formula": lambda a: borderline(canon, a),
        "closed": lambda a: borderline_closed_form(canon, a),
        "transcendental": lambda a: borderline_transcendental(canon, a),
        "bisect": lambda a: borderline_bisection(canon, a, tolerances=tolerances),
    }
    if method not in solvers:
        raise ConfigurationError(f"unknown method {method!r}")
    unit = PI2 if pi2_units else 1.0
    header = ["alpha", "g", "g_hat"]
    mixed = canon.label == "DD/NN"
    if mixed:
        header += ["g_M_lower", "g_M_upper"]
    rows = []
    for alpha in np.linspace(alpha_min, alpha_max, samples):
        alpha = float(alpha)
        g = solvers[method](alpha)
        row = [alpha, g / unit, g_hat(alpha) / unit]
        if mixed:
            lower, upper = g_M_bounds(alpha)
            if not lower - 1e-9 <= g <= upper + 1e-9:
                raise NumericalError(f"mixed borderline {g:.10g} outside its bounds at alpha={alpha:.10g}")
            row += [lower / unit, upper / unit]
        rows.append(row)
    return header, rows
