"""Fields of extremals, the excess function and strong/global minimality (scalar case).

A field is stored as a family of extremals ``phi(x, alpha)`` sampled on the
candidate's grid for a nondecreasing list of parameters.  A repeated
parameter marks a seam between smoothly parametrized pieces; alpha
derivatives are taken piecewise with five-point stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import simpson

from . import shooting
from .errors import ConfigurationError, LegendreError, NumericalError
from .interp import hermite
from .jacobi import Tolerances, classify
from .lagrangians import Lagrangian
from .problem import ExtremalPath, Problem
from .verdict import Certificate, Outcome, Verdict

ALPHA_SAMPLES = 41
MIN_EPS = 1e-4
EXTENSION = 0.05
MODES = ("auto", "natural-left", "dirichlet-left", "translation", "mixed")


class FieldConstructionError(NumericalError):
    """No injective family was found down to the smallest parameter range."""


class TubeExitError(ConfigurationError):
    def __init__(self, message: str, x: float):
        super().__init__(message)
        self.x = x


def excess(lag: Lagrangian, x, u, p, q) -> np.ndarray:
    """E = f(x,u,q) - f(x,u,p) - (q - p).f_p(x,u,p), batched over leading axes."""
    u, p, q = (np.asarray(z, dtype=float) for z in (u, p, q))
    if u.ndim == 0:
        u, p, q = u[None], p[None], q[None]
    return (lag.value(x, u, q) - lag.value(x, u, p)
            - np.einsum("...i,...i->...", q - p, lag.f_p(x, u, p)))


def _five_point(F: np.ndarray, h: float) -> np.ndarray:
    """d/dalpha along axis 0 for uniformly spaced samples (at least 5)."""
    out = np.empty_like(F)
    out[2:-2] = (F[:-4] - 8 * F[1:-3] + 8 * F[3:-1] - F[4:]) / (12 * h)
    out[0] = (-25 * F[0] + 48 * F[1] - 36 * F[2] + 16 * F[3] - 3 * F[4]) / (12 * h)
    out[1] = (-3 * F[0] - 10 * F[1] + 18 * F[2] - 6 * F[3] + F[4]) / (12 * h)
    out[-1] = (25 * F[-1] - 48 * F[-2] + 36 * F[-3] - 16 * F[-4] + 3 * F[-5]) / (12 * h)
    out[-2] = (3 * F[-1] + 10 * F[-2] - 18 * F[-3] + 6 * F[-4] - F[-5]) / (12 * h)
    return out


@dataclass(frozen=True)
class Piece:
    """Uniformly parametrized slice of a family: arrays are (alpha, x)."""

    alpha: np.ndarray
    phi: np.ndarray
    phi_x: np.ndarray
    phi_xx: np.ndarray


@dataclass(frozen=True)
class FieldOfExtremals:
    x: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    phi_x: np.ndarray
    phi_xx: np.ndarray
    phi_a: np.ndarray
    phi_xa: np.ndarray
    mode: str
    eps: float
    is_global: bool = False
    notes: tuple[str, ...] = ()

    @property
    def center(self) -> int:
        return int(np.argmin(np.abs(self.alpha)))

    def injective(self) -> bool:
        return bool(np.all(self.phi_a > 0))

    def _columns(self, x):
        """Family data at abscissae ``x``: arrays shaped (alpha, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.x[0] - 1e-12) or np.any(x > self.x[-1] + 1e-12):
            raise ConfigurationError("abscissa outside the field interval")
        phi, _ = hermite(self.x, self.phi.T, self.phi_x.T, x)
        phx, _ = hermite(self.x, self.phi_x.T, self.phi_xx.T, x)
        pa, _ = hermite(self.x, self.phi_a.T, self.phi_xa.T, x)
        pxa = np.array([np.interp(x, self.x, row) for row in self.phi_xa])
        return x, phi.T, phx.T, pa.T, pxa

    def locate(self, x, v) -> tuple[np.ndarray, np.ndarray]:
        """Parameter alpha(x, v) and slope psi(x, v) for matching arrays x, v."""
        xs, F, G, Fa, Ga = self._columns(x)
        v = np.broadcast_to(np.asarray(v, dtype=float), xs.shape)
        slack = 1e-12 * (1.0 + np.abs(v))
        low, high = F[0] - slack, F[-1] + slack
        bad = (v < low) | (v > high)
        if np.any(bad):
            where = float(xs[np.flatnonzero(bad)[0]])
            raise TubeExitError(f"point leaves the field at x={where:.10g}", where)
        cols = np.arange(len(xs))
        j = np.clip(np.sum(F < v, axis=0) - 1, 0, len(self.alpha) - 2)
        j = np.where(self.alpha[j + 1] == self.alpha[j], np.minimum(j + 1, len(self.alpha) - 2), j)
        a0, a1 = self.alpha[j], self.alpha[j + 1]
        da = a1 - a0
        y0, y1 = F[j, cols], F[j + 1, cols]
        d0, d1 = Fa[j, cols] * da, Fa[j + 1, cols] * da

        def cubic(t, y0, d0, y1, d1):
            t2, t3 = t * t, t * t * t
            return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0
                    + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1)

        lo, hi = np.zeros_like(v), np.ones_like(v)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            above = cubic(mid, y0, d0, y1, d1) > v
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        t = 0.5 * (lo + hi)
        slope = cubic(t, G[j, cols], Ga[j, cols] * da, G[j + 1, cols], Ga[j + 1, cols] * da)
        return a0 + t * da, slope

    def slope(self, x, v) -> np.ndarray:
        return self.locate(x, v)[1]

    def csv_rows(self, stride: int = 1):
        for k, a in enumerate(self.alpha):
            for i in range(0, len(self.x), stride):
                yield (self.x[i], a, self.phi[k, i], self.phi_x[k, i])


def assemble_field(x: np.ndarray, pieces: list[Piece], mode: str, eps: float,
                   is_global: bool = False, notes: tuple[str, ...] = ()) -> FieldOfExtremals:
    """Concatenate pieces (each uniform in alpha) and differentiate piecewise."""
    cols = {k: [] for k in ("alpha", "phi", "phi_x", "phi_xx", "phi_a", "phi_xa")}
    for pc in pieces:
        if len(pc.alpha) < 5:
            raise ConfigurationError("each field piece needs at least 5 parameter samples")
        h = float(pc.alpha[1] - pc.alpha[0])
        cols["alpha"].append(pc.alpha)
        cols["phi"].append(pc.phi)
        cols["phi_x"].append(pc.phi_x)
        cols["phi_xx"].append(pc.phi_xx)
        cols["phi_a"].append(_five_point(pc.phi, h))
        cols["phi_xa"].append(_five_point(pc.phi_x, h))
    data = {k: np.concatenate(v, axis=0) for k, v in cols.items()}
    if np.any(np.diff(data["alpha"]) < 0):
        raise ConfigurationError("field pieces must be ordered by parameter")
    return FieldOfExtremals(x, data["alpha"], data["phi"], data["phi_x"], data["phi_xx"],
                            data["phi_a"], data["phi_xa"], mode, eps, is_global, notes)


# ---------------------------------------------------------------------------
# construction


def _scalar(problem: Problem):
    if problem.dim != 1:
        raise ConfigurationError("field construction is implemented for scalar problems (N = 1)")


def extend(lag: Lagrangian, path: ExtremalPath, left: float = 0.0, right: float = 0.0) -> ExtremalPath:
    """Continue an extremal beyond its ends with the path's own mean step."""
    h = float(np.mean(np.diff(path.grid)))
    acc = path.second if path.second is not None else shooting.acceleration(
        lag, path.grid, path.values, path.derivatives)
    grid, vals, ders, accs = [path.grid], [path.values], [path.derivatives], [acc]
    if left > 0:
        m = int(np.ceil(left / h - 1e-9))
        g = path.a - h * np.arange(m + 1)
        u, p, a = shooting.rk4(lag, g, path.values[0], path.derivatives[0])
        grid.insert(0, g[:0:-1])
        vals.insert(0, u[:0:-1])
        ders.insert(0, p[:0:-1])
        accs.insert(0, a[:0:-1])
    if right > 0:
        m = int(np.ceil(right / h - 1e-9))
        g = path.b + h * np.arange(m + 1)
        u, p, a = shooting.rk4(lag, g, path.values[-1], path.derivatives[-1])
        grid.append(g[1:])
        vals.append(u[1:])
        ders.append(p[1:])
        accs.append(a[1:])
    return ExtremalPath(np.concatenate(grid), np.concatenate(vals),
                        np.concatenate(ders), np.concatenate(accs))


def _shoot_piece(lag: Lagrangian, grid: np.ndarray, alpha: np.ndarray, u0, p0, keep=None) -> Piece:
    u, p, acc = shooting.rk4(lag, grid, u0, p0)
    sl = slice(None) if keep is None else keep
    return Piece(alpha, u[sl, :, 0].T, p[sl, :, 0].T, acc[sl, :, 0].T)


def _family(problem: Problem, path: ExtremalPath, mode: str, eps: float, samples: int) -> Piece:
    lag = problem.lagrangian
    alpha = np.linspace(-eps, eps, samples)
    grid = path.grid
    if mode == "natural-left":
        if problem.pinned("a"):
            raise ConfigurationError("natural-left mode needs a free left end")
        u0 = (path.values[0, 0] + alpha)[:, None]
        w = shooting.natural_slope(lag, path.a, u0, path.derivatives[0, 0])
        return _shoot_piece(lag, grid, alpha, u0, w)
    if mode == "translation":
        if not lag.autonomous:
            raise ConfigurationError("translation mode needs an autonomous Lagrangian")
        ext = extend(lag, path, left=eps)
        u0, p0 = hermite(ext.grid, ext.values, ext.derivatives, path.a + alpha)
        return _shoot_piece(lag, grid, alpha, u0, p0)
    if mode == "dirichlet-left":
        ext = extend(lag, path, left=EXTENSION * (path.b - path.a))
        start = len(ext.grid) - len(grid)
        u0 = np.broadcast_to(ext.values[0], (samples, 1))
        p0 = ext.derivatives[0] + alpha[:, None]
        return _shoot_piece(lag, ext.grid, alpha, u0, p0, keep=slice(start, None))
    if mode == "mixed":
        raise ConfigurationError("mixed mode needs pinned and free components at a; "
                                 "a scalar problem has only one component")
    raise ConfigurationError(f"unknown field mode {mode!r}")


def auto_modes(problem: Problem) -> list[str]:
    modes = [] if problem.pinned("a") else ["natural-left"]
    if problem.lagrangian.autonomous:
        modes.append("translation")
    modes.append("dirichlet-left")
    return modes


def build_field(problem: Problem, path: ExtremalPath, mode: str = "auto",
                samples: int = ALPHA_SAMPLES, eps: float | None = None) -> FieldOfExtremals:
    """Shoot a one-parameter family around ``path`` and shrink it until injective."""
    _scalar(problem)
    if mode == "auto":
        errors = []
        for m in auto_modes(problem):
            try:
                return build_field(problem, path, m, samples, eps)
            except (FieldConstructionError, LegendreError) as exc:
                errors.append(f"{m}: {exc}")
        raise FieldConstructionError("; ".join(errors))
    if mode not in MODES:
        raise ConfigurationError(f"unknown field mode {mode!r}")
    if samples < 5 or samples % 2 == 0:
        raise ConfigurationError("the parameter sample count must be odd and at least 5")
    eps = 0.1 * (1.0 + float(np.max(np.abs(path.values)))) if eps is None else float(eps)
    last = None
    while eps >= MIN_EPS:
        try:
            piece = _family(problem, path, mode, eps, samples)
        except (LegendreError, NumericalError) as exc:
            last = str(exc)
        else:
            fld = assemble_field(path.grid, [piece], mode, eps)
            defect = float(np.max(np.abs(fld.phi[fld.center] - path.values[:, 0])))
            if defect > 1e-8 * (1.0 + np.max(np.abs(path.values))):
                raise NumericalError(f"central member deviates from the candidate by {defect:.3g}")
            if fld.injective():
                return fld
            last = "family members intersect"
        eps *= 0.5
    raise FieldConstructionError(f"{mode} field not injective down to range {MIN_EPS}: {last}")


# ---------------------------------------------------------------------------
# conditions on the field


@dataclass(frozen=True)
class FieldConditions:
    symmetry_defect: float
    worst_a: float
    worst_b: float
    field_a: bool
    field_b: bool
    reversed_side: int = 0
    details: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.field_a and self.field_b and self.symmetry_defect <= 1e-8

    @property
    def reversed(self) -> bool:
        return self.reversed_side != 0


def _end_products(fld: FieldOfExtremals, problem: Problem, path: ExtremalPath, idx: int):
    lag = problem.lagrangian
    x = fld.x[idx]
    v = fld.phi[:, idx][:, None]
    fp = lag.f_p(x, v, fld.phi_x[:, idx][:, None])[:, 0]
    return fp * (v[:, 0] - path.values[idx, 0]), fp


def check_field_conditions(fld: FieldOfExtremals, problem: Problem, path: ExtremalPath,
                           tol: float = 1e-10) -> FieldConditions:
    """Endpoint sign conditions sampled over the family.

    For a scalar problem the symmetry condition holds trivially.  A pinned end
    restricts the condition to v = u0 there, which makes it vacuous.
    """
    s_a, fp_a = _end_products(fld, problem, path, 0)
    s_b, fp_b = _end_products(fld, problem, path, -1)
    scale = 1.0 + max(float(np.max(np.abs(s_a))), float(np.max(np.abs(s_b))))
    t = tol * scale
    free_a, free_b = not problem.pinned("a"), not problem.pinned("b")
    worst_a = float(np.max(s_a)) if free_a else 0.0
    worst_b = float(np.min(s_b)) if free_b else 0.0
    side = 0
    if free_a and free_b:
        for s in (1, -1):
            sel = np.sign(fld.alpha) == s
            ra, rb = s_a[sel], s_b[sel]
            if np.all(ra >= -t) and np.all(rb <= t) and np.all(np.maximum(ra, -rb) > t):
                side = s
                break
    details = {"fp_a_max": float(np.max(np.abs(fp_a))), "fp_b_max": float(np.max(np.abs(fp_b)))}
    return FieldConditions(0.0, worst_a, worst_b, worst_a <= t, worst_b >= -t, side, details)


# ---------------------------------------------------------------------------
# excess scans


@dataclass(frozen=True)
class ExcessReport:
    min_value: float
    argmin: dict
    mode: str
    certified: bool
    note: str = ""

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= -1e-12 * (1.0 + abs(self.argmin.get("scale", 0.0)))


def _poly_min(c: np.ndarray, p: np.ndarray):
    """Exact infimum over q of E(q) for a p-polynomial of degree <= 4.

    E(q) = (q - p)^2 R(q) has critical points at q = p and at the roots of
    S(q) = 4c4 q^2 + (3c3 + 4c4 p) q + 2c2 + 3c3 p + 4c4 p^2.
    Returns (min, argmin q), -inf when E is unbounded below.
    """
    c = np.pad(c, [(0, 0)] * (c.ndim - 1) + [(0, max(0, 5 - c.shape[-1]))])
    c2, c3, c4 = c[..., 2], c[..., 3], c[..., 4]
    def poly(z):
        return sum(c[..., k] * z ** k for k in range(5))

    def E(q):
        slope = sum(k * c[..., k] * p ** (k - 1) for k in range(1, 5))
        return poly(q) - poly(p) - (q - p) * slope

    best = np.zeros_like(p)
    arg = p.copy()
    A = 4 * c4
    B = 3 * c3 + 4 * c4 * p
    C = 2 * c2 + 3 * c3 * p + 4 * c4 * p * p
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        disc = B * B - 4 * A * C
        quad = A != 0
        root = np.sqrt(np.where(disc >= 0, disc, np.nan))
        cands = [np.where(quad, (-B + root) / (2 * A), np.nan),
                 np.where(quad, (-B - root) / (2 * A), np.nan),
                 np.where(~quad & (B != 0), -C / B, np.nan)]
        for q in cands:
            val = np.where(np.isfinite(q), E(np.nan_to_num(q)), np.inf)
            better = val < best
            best = np.where(better, val, best)
            arg = np.where(better, q, arg)
    unbounded = (c4 < 0) | ((c4 == 0) & (c3 != 0)) | ((c4 == 0) & (c3 == 0) & (c2 < 0))
    best = np.where(unbounded, -np.inf, best)
    return best, arg


def excess_at(lag: Lagrangian, x: np.ndarray, v: np.ndarray, psi: np.ndarray, mode: str = "global",
              eta: float | None = None, radii=(1, 2, 4, 8, 16, 32, 64)) -> ExcessReport:
    """Minimum of E(x, v, psi, q) over q at the given points (all 1-D arrays)."""
    x, v, psi = (np.asarray(z, dtype=float).ravel() for z in (x, v, psi))
    if mode == "global":
        coeffs = lag.p_polynomial(x, v[:, None])
        if coeffs is not None and coeffs.shape[-1] <= 5:
            vals, qs = _poly_min(np.asarray(coeffs, dtype=float), psi)
            k = int(np.argmin(vals))
            arg = {"x": x[k], "v": v[k], "p": psi[k], "q": qs[k]}
            return ExcessReport(float(vals[k]), arg, "global", True, "exact for polynomial degree <= 4")
        best, arg, used = np.inf, {}, 0
        for R in radii:
            rep = _scan(lag, x, v, psi, float(R))
            used = R
            if rep[0] < best:
                best, arg = rep
            elif best < 0:
                break
        return ExcessReport(best, arg, "global", False, f"global over scanned range |q - psi| <= {used}")
    if mode != "weak":
        raise ConfigurationError(f"unknown excess mode {mode!r}")
    eta = 1e-2 * (1.0 + float(np.max(np.abs(psi)))) if eta is None else float(eta)
    best, arg = _scan(lag, x, v, psi, eta)
    return ExcessReport(best, arg, "weak", True, f"eta={eta:.6g}")


def _scan(lag, x, v, psi, radius, count: int = 41):
    offs = radius * np.linspace(-1.0, 1.0, count)
    q = psi[:, None] + offs[None, :]
    vals = excess(lag, x[:, None], np.broadcast_to(v[:, None, None], q.shape + (1,)),
                  np.broadcast_to(psi[:, None, None], q.shape + (1,)), q[..., None])
    k = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return float(vals[k]), {"x": x[k[0]], "v": v[k[0]], "p": psi[k[0]], "q": q[k]}


def excess_scan(fld: FieldOfExtremals, problem: Problem, q_mode: str = "global",
                eta: float | None = None, stride: int = 10) -> ExcessReport:
    """Sign of E over the tube, sampled at stored family points (where psi = phi_x)."""
    cols = np.arange(0, len(fld.x), stride)
    if cols[-1] != len(fld.x) - 1:
        cols = np.append(cols, len(fld.x) - 1)
    xs = np.broadcast_to(fld.x[cols], fld.phi[:, cols].shape)
    return excess_at(problem.lagrangian, xs, fld.phi[:, cols], fld.phi_x[:, cols], q_mode, eta)


# ---------------------------------------------------------------------------
# Hilbert invariant integral


def _on_grid(v, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(v, tuple):
        return tuple(np.asarray(z, dtype=float).reshape(len(grid)) for z in v)
    vals, ders = v(grid)
    return vals[:, 0], ders[:, 0]


def hilbert_integral(fld: FieldOfExtremals, problem: Problem, v) -> float:
    """Simpson value of int f(x,v,psi) + (v' - psi) f_p(x,v,psi) on the field grid.

    ``v`` is an ExtremalPath-like object (callable returning values and slopes)
    or a pair of arrays sampled on the field grid.
    """
    vals, ders = _on_grid(v, fld.x)
    psi = fld.slope(fld.x, vals)
    lag = problem.lagrangian
    u, s = vals[:, None], psi[:, None]
    integrand = lag.value(fld.x, u, s) + (ders - psi) * lag.f_p(fld.x, u, s)[:, 0]
    return float(simpson(integrand, x=fld.x))


def functional(problem: Problem, v, grid: np.ndarray | None = None) -> float:
    """Simpson value of the functional along ``v`` (on its own grid by default)."""
    grid = v.grid if grid is None else np.asarray(grid, dtype=float)
    vals, ders = _on_grid(v, grid)
    return float(simpson(problem.lagrangian.value(grid, vals[:, None], ders[:, None]), x=grid))


def integrated_excess(fld: FieldOfExtremals, problem: Problem, v) -> float:
    vals, ders = _on_grid(v, fld.x)
    psi = fld.slope(fld.x, vals)
    e = excess(problem.lagrangian, fld.x, vals[:, None], psi[:, None], ders[:, None])
    return float(simpson(e, x=fld.x))


# ---------------------------------------------------------------------------
# strong / global classification


def _witness_payload(rep: ExcessReport) -> dict:
    a = rep.argmin
    return {"x": a["x"], "v": a["v"], "p": a["p"], "q": a["q"], "E": rep.min_value}


def classify_strong(problem: Problem, path: ExtremalPath, mode: str = "auto",
                    fld: FieldOfExtremals | None = None, eta: float | None = None,
                    tolerances: Tolerances = Tolerances(), q_range: str = "global") -> Verdict:
    """Strong/global verdict from a field of extremals and the excess function.

    The weak question is settled first by the Jacobi test; a candidate that
    is not a weak minimizer is never reported strong.
    """
    _scalar(problem)
    if q_range not in ("global", "weak"):
        raise ConfigurationError(f"q_range must be 'global' or 'weak', got {q_range!r}")
    weak = classify(problem, path, tolerances)
    trail = [f"weak test: {weak.outcome.value}"]
    if weak.outcome is Outcome.NOT_WEAK:
        return Verdict(Outcome.NOT_WEAK, weak.certificate, weak.diagnostics, tuple(trail))
    lag = problem.lagrangian
    # Weierstrass necessary condition along the candidate itself
    along = excess_at(lag, path.grid, path.values[:, 0], path.derivatives[:, 0], "global")
    if along.min_value < -1e-10:
        trail.append("excess negative along the candidate: not a strong minimizer")
        if weak.outcome is Outcome.STRICT_WEAK:
            cert = Certificate("negative_excess", _witness_payload(along))
            return Verdict(Outcome.WEAK_NOT_STRONG, cert, weak.diagnostics, tuple(trail))
        return Verdict(Outcome.INCONCLUSIVE, Certificate("negative_excess", _witness_payload(along)),
                       weak.diagnostics, tuple(trail))
    candidates = [fld] if fld is not None else auto_modes(problem) if mode == "auto" else [mode]
    for item in candidates:
        if isinstance(item, str):
            try:
                current = build_field(problem, path, item)
            except (FieldConstructionError, LegendreError) as exc:
                trail.append(f"{item} field: {exc}")
                continue
        else:
            current = item
        cond = check_field_conditions(current, problem, path)
        trail.append(f"{current.mode} field on |alpha| <= {current.eps:.6g}: "
                     f"endpoint conditions {'hold' if cond.passed else 'fail'}")
        if cond.passed and q_range == "weak":
            rep = excess_scan(current, problem, "weak", eta)
            if rep.min_value >= -1e-10 and weak.outcome is Outcome.STRICT_WEAK:
                trail.append(f"excess checked only near the field slope ({rep.note})")
                payload = {"field": current.mode, "eps": current.eps, "min_E": rep.min_value}
                return Verdict(Outcome.STRICT_WEAK, Certificate("field", payload), weak.diagnostics,
                               tuple(trail))
            trail.append("excess negative near the field slope")
        elif cond.passed:
            rep = excess_scan(current, problem, "global")
            payload = {"field": current.mode, "eps": current.eps, "min_E": rep.min_value}
            if rep.min_value >= -1e-10:
                if rep.note:
                    trail.append(rep.note)
                outcome = Outcome.GLOBAL if current.is_global and rep.certified else Outcome.STRONG
                return Verdict(outcome, Certificate("field", payload), weak.diagnostics, tuple(trail))
            weak_rep = excess_scan(current, problem, "weak", eta)
            if weak_rep.min_value >= -1e-10:
                cert = Certificate("negative_excess", _witness_payload(rep))
                return Verdict(Outcome.WEAK_NOT_STRONG, cert, weak.diagnostics, tuple(trail))
            trail.append("excess negative arbitrarily close to the field slope")
        elif cond.reversed:
            if weak.outcome is Outcome.STRICT_WEAK:
                trail.append("reversed endpoint signs contradict the Jacobi verdict")
                continue
            payload = {"field": current.mode, "side": cond.reversed_side,
                       "worst_a": cond.worst_a, "worst_b": cond.worst_b}
            return Verdict(Outcome.NOT_WEAK, Certificate("field_reversal", payload),
                           weak.diagnostics, tuple(trail))
    trail.append("no field settled the strong question")
    return Verdict(Outcome.INCONCLUSIVE, weak.certificate, weak.diagnostics, tuple(trail))
