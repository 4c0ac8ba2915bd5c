"""Autonomous scalar examples: elastica, double-well Lagrangians and phase portraits."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import integrate, optimize

from . import shooting
from .errors import ConfigurationError, NumericalError
from .field import (FieldOfExtremals, Piece, assemble_field, classify_strong, excess_at, extend)
from .jacobi import Tolerances, classify
from .lagrangians import Lagrangian, ScalarLagrangian, double_well_a, double_well_b, elastica
from .problem import DEFAULT_NODES, ExtremalPath, Problem
from .verdict import Certificate, Outcome, Verdict

SEPARATRIX_TOL = 1e-8
NATURAL_TOL = 1e-6
SQRT21 = np.sqrt(21.0)
P2 = (1.0 + SQRT21) / 3.0


def level_function(lag: Lagrangian, u, p) -> np.ndarray:
    """V(u, p) = f - p f_p, conserved along extremals of an autonomous f."""
    u = np.asarray(u, dtype=float)[..., None]
    p = np.asarray(p, dtype=float)[..., None]
    return lag.value(0.0, u, p) - (p * lag.f_p(0.0, u, p))[..., 0]


def shoot_extremal(lag: Lagrangian, a: float, b: float, u_a: float, slope: float | None = None,
                   nodes: int = DEFAULT_NODES, seed: float = 0.0) -> ExtremalPath:
    """RK4 shot from (u_a, slope); a missing slope solves f_p(u_a, w) = 0 from ``seed``."""
    if not lag.autonomous or lag.dim != 1:
        raise ConfigurationError("shooting helper expects an autonomous scalar Lagrangian")
    if slope is None:
        slope = float(shooting.natural_slope(lag, a, np.array([[u_a]]), np.array([[seed]]))[0, 0])
    grid = np.linspace(a, b, nodes)
    u, p, acc = shooting.rk4(lag, grid, np.array([u_a]), np.array([slope]))
    return ExtremalPath(grid, u, p, acc)


def natural_residual(lag: Lagrangian, path: ExtremalPath) -> float:
    fp = lag.f_p(path.grid[[0, -1]], path.values[[0, -1]], path.derivatives[[0, -1]])
    return float(np.max(np.abs(fp)))


# ---------------------------------------------------------------------------
# elastica: f = (p - K)^2 / 2 + M cos u


def elastica_problem(M: float, K: float) -> Problem:
    if M <= 0:
        raise ConfigurationError("elastica needs M > 0")
    return Problem(elastica(M, K), 0.0, 1.0)


def classify_elastica(M: float, K: float, extremal: ExtremalPath) -> Verdict:
    """Phase-plane rule for critical points of the elastica functional on [0, 1].

    Minimizer iff u is constant (2k+1)pi, or u lies on a level C0 > 2M with
    u''(0) < 0 < u''(1); every other critical point is not a minimizer.
    """
    if M <= 0:
        raise ConfigurationError("elastica needs M > 0")
    trail = ["weak and strong minimality coincide for (p - K)^2/2 + g(u)"]
    u = extremal.values[:, 0].copy()
    p = extremal.derivatives[:, 0].copy()
    if K < 0:
        u, p, K = -u, -p, -K
        trail.append("K < 0 mapped to K > 0 by u -> -u")
    if max(abs(p[0] - K), abs(p[-1] - K)) > NATURAL_TOL:
        raise ConfigurationError("path violates the natural conditions u'(0) = u'(1) = K")
    if np.ptp(u) <= 1e-10 and np.max(np.abs(p)) <= 1e-10:
        k = int(np.round(u[0] / np.pi))
        if abs(u[0] - k * np.pi) > 1e-8:
            raise ConfigurationError("constant path is not an equilibrium u = k pi")
        payload = {"u": u[0], "k": k}
        if k % 2:
            return Verdict(Outcome.MINIMIZER, Certificate("constant_odd", payload), {}, tuple(trail))
        return Verdict(Outcome.NOT_MINIMIZER, Certificate("constant_even", payload), {}, tuple(trail))
    level = p * p - 2 * M * np.cos(u)
    C0 = float(np.mean(level))
    if np.ptp(level) > 1e-6 * (1.0 + abs(C0)):
        raise ConfigurationError("path is not an extremal: u'^2 - 2M cos u is not constant")
    upp0, upp1 = -M * np.sin(u[0]), -M * np.sin(u[-1])
    payload = {"C0": C0, "upp0": upp0, "upp1": upp1}
    diag = {"C0_minus_2M": C0 - 2 * M}
    if abs(C0 - 2 * M) <= SEPARATRIX_TOL:
        trail.append("level within tolerance of the separatrix C0 = 2M")
        return Verdict(Outcome.DEGENERATE, Certificate("separatrix", payload), diag, tuple(trail))
    if C0 > 2 * M and upp0 < 0 < upp1:
        return Verdict(Outcome.MINIMIZER, Certificate("phase_rule", payload), diag, tuple(trail))
    return Verdict(Outcome.NOT_MINIMIZER, Certificate("phase_rule", payload), diag, tuple(trail))


def elastica_scan(M: float, K: float, samples: int = 721, nodes: int = DEFAULT_NODES,
                  window: tuple[float, float] = (0.0, 2 * np.pi)) -> list[ExtremalPath]:
    """Critical points with u(0) in ``window``, found by shooting on u(0).

    Sign changes of u'(1) - K are located with one batched coarse shot over
    all starts, refined by Brent's method on an adaptive integration, and the
    final paths are recomputed by RK4 on the full grid.
    """
    lag = elastica(M, K)
    starts = np.linspace(window[0], window[1], samples)
    coarse = np.linspace(0.0, 1.0, 201)
    _, p, _ = shooting.rk4(lag, coarse, starts[:, None], np.full((samples, 1), float(K)))
    r = p[-1, :, 0] - K

    def rhs(_, y):
        return (y[1], -M * np.sin(y[0]))

    def residual(u0):
        sol = integrate.solve_ivp(rhs, (0.0, 1.0), (u0, K), method="DOP853", rtol=1e-12, atol=1e-13)
        return sol.y[1, -1] - K

    found = list(starts[np.abs(r) <= 1e-12])
    for i in np.flatnonzero(np.sign(r[:-1]) * np.sign(r[1:]) < 0):
        lo, hi = starts[i], starts[i + 1]
        if residual(lo) * residual(hi) > 0:
            continue
        found.append(optimize.brentq(residual, lo, hi, xtol=1e-14, rtol=1e-15))
    paths = []
    kept = []
    for u0 in sorted(found):
        if kept and u0 - kept[-1] <= 1e-9:
            continue
        kept.append(u0)
        path = shoot_extremal(lag, 0.0, 1.0, u0, float(K), nodes)
        if abs(path.derivatives[-1, 0] - K) <= NATURAL_TOL:
            paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# double-well Lagrangians f = g(p) + u^2


@dataclass(frozen=True)
class Well:
    name: str
    lagrangian: ScalarLagrangian
    natural_slopes: tuple[float, ...]
    legendre_roots: tuple[float, float]

    @property
    def g(self) -> np.polynomial.Polynomial:
        c = self.lagrangian.coeffs
        return np.polynomial.Polynomial(c)

    @property
    def h(self) -> np.polynomial.Polynomial:
        """Level profile: u^2 - h(u') is conserved, h = p g' - g + g(0)."""
        g = self.g
        return np.polynomial.Polynomial([0, 1]) * g.deriv() - g + g(0.0)


def well(variant: str) -> Well:
    if variant == "a":
        r = 1 / np.sqrt(3.0)
        return Well("a", double_well_a(), (0.0, 1.0, -1.0), (-r, r))
    if variant == "b":
        s7 = np.sqrt(7.0)
        return Well("b", double_well_b(), (0.0, -1.0, 2.0), ((1 - s7) / 3, (1 + s7) / 3))
    raise ConfigurationError(f"unknown double-well variant {variant!r} (use a or b)")


def _default_slope(w: Well, end_slope: float | None) -> float:
    s = (1.0 if w.name == "a" else 2.0) if end_slope is None else float(end_slope)
    if not any(abs(s - z) < 1e-12 for z in w.natural_slopes if z != 0.0):
        raise ConfigurationError(f"end slope must be one of the nonzero natural slopes {w.natural_slopes[1:]}")
    return s


def _edge(w: Well, s: float) -> float:
    return w.legendre_roots[1] if s > 0 else w.legendre_roots[0]


def half_transit(w: Well, m: float, s: float) -> float:
    """Length from the slope extremum m (where u = 0) to the slope s.

    With p = m + (s - m) t^2 the integrand g''(p) / (2 sqrt(h(p) - h(m))) dp
    becomes smooth in t; h(p) - h(m) is expanded about m to avoid cancellation.
    """
    gpp = w.g.deriv(2)
    shifted = w.h(np.polynomial.Polynomial([m, 1.0]))
    q = np.polynomial.Polynomial(shifted.coef[1:])
    span = s - m
    if span == 0.0:
        return 0.0

    def integrand(t):
        d = span * t * t
        return gpp(m + d) * span / np.sqrt(np.abs(span * q(d)))

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return abs(val)


def b_star(variant: str, end_slope: float | None = None) -> float:
    """Largest length admitting an end-slope extremal inside the Legendre region."""
    w = well(variant)
    s = _default_slope(w, end_slope)
    return 2 * half_transit(w, _edge(w, s), s)


def double_well_problem(variant: str, length: float, a: float = 0.0) -> Problem:
    if length <= 0:
        raise ConfigurationError("length must be positive")
    return Problem(well(variant).lagrangian, a, a + length)


def extremum_slope(variant: str, length: float, end_slope: float | None = None) -> float:
    """Slope m at the center of the symmetric extremal with the given end slopes."""
    w = well(variant)
    s = _default_slope(w, end_slope)
    edge = _edge(w, s)
    limit = 2 * half_transit(w, edge, s)
    if length >= limit:
        raise ConfigurationError(
            f"no end-slope {s:g} extremal inside the Legendre region for length {length:.10g} "
            f">= {limit:.10g}")
    fn = lambda m: 2 * half_transit(w, m, s) - length
    lo, hi = sorted((edge, s))
    return optimize.brentq(fn, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def double_well_extremal(variant: str, length: float, end_slope: float | None = None,
                         nodes: int = DEFAULT_NODES, a: float = 0.0) -> ExtremalPath:
    """Symmetric extremal with u'(a) = u'(b) = end slope, shot from its center."""
    if nodes % 2 == 0:
        nodes += 1
    w = well(variant)
    m = extremum_slope(variant, length, end_slope)
    grid = np.linspace(a, a + length, nodes)
    c = nodes // 2
    lag = w.lagrangian
    u, p, acc = shooting.rk4(lag, grid[c:], np.array([0.0]), np.array([m]))
    values = np.concatenate([-u[:0:-1], u])
    slopes = np.concatenate([p[:0:-1], p])
    second = np.concatenate([-acc[:0:-1], acc])
    path = ExtremalPath(grid, values, slopes, second)
    if natural_residual(lag, path) > NATURAL_TOL:
        raise NumericalError("double-well extremal misses the natural end condition")
    return path


def double_well_global_field(problem: Problem, path: ExtremalPath, reach: float | None = None,
                             samples: int = 41) -> FieldOfExtremals:
    """Global field for variant b from translations of the candidate.

    For |alpha| <= L = b - a the members are u0(x + alpha); beyond, they leave
    a (alpha > L) or reach b (alpha < -L) with slope 2 at heights continuing
    the translated endpoint values.  The seams at alpha = +-L are only
    continuous, which the piecewise parameter derivatives accommodate.
    """
    lag = problem.lagrangian
    L = problem.b - problem.a
    reach = 2.0 + float(np.max(np.abs(path.values))) if reach is None else float(reach)
    ext = extend(lag, path, left=L, right=L)
    grid = path.grid
    pieces = []
    # alpha < -L: data at b
    al = np.linspace(-L - reach, -L, samples)
    u0 = (path.values[0, 0] + al + L)[:, None]
    u, p, acc = shooting.rk4(lag, grid[::-1], u0, np.full_like(u0, 2.0))
    pieces.append(Piece(al, u[::-1, :, 0].T, p[::-1, :, 0].T, acc[::-1, :, 0].T))
    # |alpha| <= L: translations, shot from a with the translated state
    from .interp import hermite
    al = np.linspace(-L, L, 2 * samples - 1)
    st, sp = hermite(ext.grid, ext.values, ext.derivatives, problem.a + al)
    u, p, acc = shooting.rk4(lag, grid, st, sp)
    pieces.append(Piece(al, u[:, :, 0].T, p[:, :, 0].T, acc[:, :, 0].T))
    # alpha > L: data at a
    al = np.linspace(L, L + reach, samples)
    u0 = (path.values[-1, 0] + al - L)[:, None]
    u, p, acc = shooting.rk4(lag, grid, u0, np.full_like(u0, 2.0))
    pieces.append(Piece(al, u[:, :, 0].T, p[:, :, 0].T, acc[:, :, 0].T))
    note = f"global over sampled parameters [{-L - reach:.6g}, {L + reach:.6g}]"
    fld = assemble_field(grid, pieces, "global-translation", L + reach, True, (note,))
    if np.min(fld.phi_a) < 1.0 - 1e-6:
        raise NumericalError(f"global family not monotone enough: min phi_alpha = {np.min(fld.phi_a):.6g}")
    return fld


def classify_double_well(variant: str, extremal: ExtremalPath,
                         tolerances: Tolerances = Tolerances()) -> Verdict:
    w = well(variant)
    lag = w.lagrangian
    problem = Problem(lag, extremal.a, extremal.b)
    ends = extremal.derivatives[[0, -1], 0]
    for s in ends:
        if min(abs(s - z) for z in w.natural_slopes) > NATURAL_TOL:
            raise ConfigurationError(f"end slope {s:.10g} violates the natural condition "
                                     f"u' in {w.natural_slopes}")
    trail = []
    p = extremal.derivatives[:, 0]
    gpp = w.g.deriv(2)(p)
    c0 = float(np.min(gpp))
    if np.max(np.abs(extremal.values)) <= 1e-12 and np.max(np.abs(p)) <= 1e-12:
        trail.append("the constant extremal u = 0 violates the Legendre condition")
        if variant == "a":
            trail.append("footnote: inf Phi = 0 is not attained")
        return Verdict(Outcome.NOT_MINIMIZER, Certificate("legendre", {"c0": c0}), {"c0": c0}, tuple(trail))
    if c0 < 0:
        trail.append("slope enters the region where f_pp < 0")
        return Verdict(Outcome.NOT_MINIMIZER, Certificate("legendre", {"c0": c0}), {"c0": c0}, tuple(trail))
    if c0 <= 1e-12:
        return Verdict(Outcome.INCONCLUSIVE, Certificate("legendre", {"c0": c0}), {"c0": c0},
                       ("f_pp vanishes on the path",))
    weak = classify(problem, extremal, tolerances)
    trail.append(f"weak test: {weak.outcome.value}")
    if weak.outcome is not Outcome.STRICT_WEAK:
        return weak.with_trail(*trail)
    along = excess_at(lag, extremal.grid, extremal.values[:, 0], p, "global")
    if along.min_value < -1e-10:
        a = along.argmin
        payload = {"x": a["x"], "p": a["p"], "q": a["q"], "E": along.min_value}
        trail.append("excess changes sign at the candidate's slope")
        return Verdict(Outcome.WEAK_NOT_STRONG, Certificate("negative_excess", payload),
                       weak.diagnostics, tuple(trail))
    if variant == "b" and np.min(p) > P2:
        fld = double_well_global_field(problem, extremal)
        return classify_strong(problem, extremal, fld=fld, tolerances=tolerances).with_trail(*fld.notes)
    return classify_strong(problem, extremal, tolerances=tolerances)


def classify_double_well_length(variant: str, length: float, end_slope: float | None = None,
                                nodes: int = DEFAULT_NODES) -> tuple[Verdict, ExtremalPath | None]:
    """Build the end-slope extremal of the given length (if any) and classify it."""
    try:
        path = double_well_extremal(variant, length, end_slope, nodes)
    except ConfigurationError as exc:
        if "Legendre region" not in str(exc):
            raise
        return Verdict(Outcome.INCONCLUSIVE, Certificate("no_extremal", {"length": length}),
                       {}, (str(exc),)), None
    return classify_double_well(variant, path), path


# ---------------------------------------------------------------------------
# phase portraits


@dataclass(frozen=True)
class PhasePortrait:
    """Sampled level curves; ``branches`` holds (level, branch id, points) triples."""

    lagrangian: Lagrangian
    window: tuple[float, float, float, float]
    levels: tuple[float, ...]
    branches: list = dc_field(default_factory=list)
    equilibria: tuple[float, ...] = ()

    def csv_rows(self):
        for level, branch, pts in self.branches:
            for u, v in pts:
                yield (level, branch, u, v)


def _elastica_example(M: float = 1.0, K: float = 0.0):
    # levels in the usual normalization (u')^2 = 2M cos u + C, i.e. C = K^2 - 2V
    lag = elastica(M, K)
    return lag, lambda u, v: v * v - 2 * M * np.cos(u)


def _well_example(variant: str):
    # levels C of u^2 = C + h(u'), which drops the constant g(0) from V
    def build(**_):
        w = well(variant)
        h = w.h
        return w.lagrangian, lambda u, v: u * u - h(v)
    return build


EXAMPLES = {
    "elastica": _elastica_example,
    "dw-a": _well_example("a"),
    "dw-b": _well_example("b"),
}


def _equilibria(lag: Lagrangian, lo: float, hi: float, count: int = 2001) -> tuple[float, ...]:
    us = np.linspace(lo, hi, count)
    fu = lag.f_u(0.0, us[:, None], np.zeros((count, 1)))[:, 0]
    roots = list(us[fu == 0])
    for i in np.flatnonzero(np.sign(fu[:-1]) * np.sign(fu[1:]) < 0):
        roots.append(optimize.brentq(lambda z: lag.f_u(0.0, np.array([z]), np.array([0.0]))[0],
                                     us[i], us[i + 1], xtol=1e-14))
    return tuple(sorted(float(r) for r in roots))


def sample_phase_portrait(lag: Lagrangian, window: tuple[float, float, float, float],
                          levels, resolution: int = 401, level_fn=None) -> PhasePortrait:
    """Level curves V(u, v) = C by marching squares on a regular window grid.

    ``level_fn(u, v)`` replaces V when the levels use another normalization of
    the same first integral.
    """
    from skimage import measure

    umin, umax, vmin, vmax = (float(z) for z in window)
    levels = tuple(float(c) for c in levels)
    if not (umin < umax and vmin < vmax):
        return PhasePortrait(lag, (umin, umax, vmin, vmax), levels)
    us = np.linspace(umin, umax, resolution)
    vs = np.linspace(vmin, vmax, resolution)
    U, Vv = np.meshgrid(us, vs, indexing="ij")
    level = level_function(lag, U, Vv) if level_fn is None else level_fn(U, Vv)
    branches = []
    for c in levels:
        for k, contour in enumerate(measure.find_contours(level, c)):
            u = np.interp(contour[:, 0], np.arange(resolution), us)
            v = np.interp(contour[:, 1], np.arange(resolution), vs)
            branches.append((c, k, np.column_stack([u, v])))
    return PhasePortrait(lag, (umin, umax, vmin, vmax), levels, branches, _equilibria(lag, umin, umax))
