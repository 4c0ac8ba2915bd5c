"""Lagrangians with batched derivative access.

Every method takes ``x`` of shape ``S`` and ``u``, ``p`` of shape ``S + (N,)``
and returns arrays of shape ``S`` (values), ``S + (N,)`` (gradients) or
``S + (N, N)`` (Hessian blocks).  ``f_pu[..., i, j]`` is the mixed derivative
with respect to ``p_i`` and ``u_j``.

Subclasses override whatever they know analytically; everything else falls
back to central finite differences.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConfigurationError

FIRST_STEP = 1e-5
SECOND_STEP = 1e-4


def _step(z: np.ndarray, scale: float) -> np.ndarray:
    return scale * (1.0 + np.abs(z))


def _shifted(z: np.ndarray, k: int, dz: np.ndarray) -> np.ndarray:
    out = np.array(z, dtype=float, copy=True)
    out[..., k] += dz
    return out


class Lagrangian:
    """Base class; ``value`` is the only mandatory method."""

    dim: int = 1
    autonomous: bool = False
    name: str = "custom"

    def value(self, x, u, p) -> np.ndarray:
        raise NotImplementedError

    def _analytic(self, method: str) -> bool:
        return getattr(type(self), method) is not getattr(Lagrangian, method)

    def f_p(self, x, u, p) -> np.ndarray:
        return self._grad_value(x, u, p, wrt="p")

    def f_u(self, x, u, p) -> np.ndarray:
        return self._grad_value(x, u, p, wrt="u")

    def f_x(self, x, u, p) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.autonomous:
            return np.zeros(np.broadcast_shapes(x.shape, np.shape(u)[:-1]))
        dx = _step(x, FIRST_STEP)
        return (self.value(x + dx, u, p) - self.value(x - dx, u, p)) / (2 * dx)

    def f_pp(self, x, u, p) -> np.ndarray:
        return self._hessian(x, u, p, "p", "p")

    def f_pu(self, x, u, p) -> np.ndarray:
        return self._hessian(x, u, p, "p", "u")

    def f_uu(self, x, u, p) -> np.ndarray:
        return self._hessian(x, u, p, "u", "u")

    def p_polynomial(self, x, u) -> np.ndarray | None:
        """Ascending coefficients of ``f`` as a polynomial in scalar ``p``, if it is one."""
        return None

    def constant_hessian(self) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
        """(f_pp, f_pu, f_uu) when they do not depend on (x, u, p) at all."""
        return None

    # finite-difference machinery

    def _args(self, x, u, p, wrt: str, z):
        return (x, z, p) if wrt == "u" else (x, u, z)

    def _grad_value(self, x, u, p, wrt: str) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        z = u if wrt == "u" else p
        cols = []
        for k in range(self.dim):
            dz = _step(z[..., k], FIRST_STEP)
            fp = self.value(*self._args(x, u, p, wrt, _shifted(z, k, dz)))
            fm = self.value(*self._args(x, u, p, wrt, _shifted(z, k, -dz)))
            cols.append((fp - fm) / (2 * dz))
        return np.stack(cols, axis=-1)

    def _hessian(self, x, u, p, first: str, second: str) -> np.ndarray:
        """Second derivative block; row index follows ``first``, column ``second``."""
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        grad_name = "f_p" if first == "p" else "f_u"
        z2 = u if second == "u" else p
        if self._analytic(grad_name):
            grad = getattr(self, grad_name)
            cols = []
            for j in range(self.dim):
                dz = _step(z2[..., j], SECOND_STEP)
                gp = grad(*self._args(x, u, p, second, _shifted(z2, j, dz)))
                gm = grad(*self._args(x, u, p, second, _shifted(z2, j, -dz)))
                cols.append((gp - gm) / (2 * dz[..., None]))
            return np.stack(cols, axis=-1)
        # four-point mixed stencil on the value itself
        n = self.dim
        shape = np.broadcast_shapes(np.shape(x), u.shape[:-1], p.shape[:-1])
        out = np.empty(shape + (n, n))

        def shift(uu, pp, var, k, d):
            if var == "u":
                return _shifted(uu, k, d), pp
            return uu, _shifted(pp, k, d)

        z1 = u if first == "u" else p
        for i in range(n):
            d1 = _step(z1[..., i], SECOND_STEP)
            for j in range(n):
                d2 = _step(z2[..., j], SECOND_STEP)
                acc = 0.0
                for s1 in (1.0, -1.0):
                    u1, p1 = shift(u, p, first, i, s1 * d1)
                    for s2 in (1.0, -1.0):
                        u2, p2 = shift(u1, p1, second, j, s2 * d2)
                        acc = acc + s1 * s2 * self.value(x, u2, p2)
                out[..., i, j] = acc / (4 * d1 * d2)
        return out


class CallableLagrangian(Lagrangian):
    """Wraps user callables ``f(x, u, p)`` acting on single points.

    Optional derivative callables follow the same signature and return
    arrays of the documented per-point shapes.  With ``vectorized=True`` the
    callables are assumed to accept batched inputs directly.
    """

    def __init__(self, dim: int, f: Callable, *, f_p=None, f_u=None, f_x=None,
                 f_pp=None, f_pu=None, f_uu=None, vectorized: bool = False,
                 autonomous: bool = False, name: str = "custom"):
        if dim < 1:
            raise ConfigurationError("dimension must be positive")
        self.dim = dim
        self.autonomous = autonomous
        self.name = name
        self._f = f
        self._vectorized = vectorized
        self._given = {"f_p": f_p, "f_u": f_u, "f_x": f_x,
                       "f_pp": f_pp, "f_pu": f_pu, "f_uu": f_uu}

    def _analytic(self, method: str) -> bool:
        return self._given.get(method) is not None

    def _call(self, fn, x, u, p, tail: tuple) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        if self._vectorized:
            return np.asarray(fn(x, u, p), dtype=float)
        shape = np.broadcast_shapes(x.shape, u.shape[:-1], p.shape[:-1])
        xb = np.broadcast_to(x, shape).reshape(-1)
        ub = np.broadcast_to(u, shape + (self.dim,)).reshape(-1, self.dim)
        pb = np.broadcast_to(p, shape + (self.dim,)).reshape(-1, self.dim)
        out = np.array([np.asarray(fn(float(xi), ui, pi), dtype=float).reshape(tail)
                        for xi, ui, pi in zip(xb, ub, pb)])
        return out.reshape(shape + tail)

    def value(self, x, u, p):
        return self._call(self._f, x, u, p, ())

    def _dispatch(self, name, x, u, p, tail, fallback):
        fn = self._given[name]
        if fn is None:
            return fallback(x, u, p)
        return self._call(fn, x, u, p, tail)

    def f_p(self, x, u, p):
        return self._dispatch("f_p", x, u, p, (self.dim,), super().f_p)

    def f_u(self, x, u, p):
        return self._dispatch("f_u", x, u, p, (self.dim,), super().f_u)

    def f_x(self, x, u, p):
        return self._dispatch("f_x", x, u, p, (), super().f_x)

    def f_pp(self, x, u, p):
        return self._dispatch("f_pp", x, u, p, (self.dim, self.dim), super().f_pp)

    def f_pu(self, x, u, p):
        return self._dispatch("f_pu", x, u, p, (self.dim, self.dim), super().f_pu)

    def f_uu(self, x, u, p):
        return self._dispatch("f_uu", x, u, p, (self.dim, self.dim), super().f_uu)


def _coef(c, x: np.ndarray, n: int) -> np.ndarray:
    """Evaluate a constant or x-dependent N x N coefficient at ``x``."""
    if callable(c):
        out = np.array([np.asarray(c(float(t)), dtype=float).reshape(n, n)
                        for t in np.ravel(x)])
        return out.reshape(np.shape(x) + (n, n))
    return np.broadcast_to(np.asarray(c, dtype=float).reshape(n, n), np.shape(x) + (n, n))


class QuadraticLagrangian(Lagrangian):
    """f = 1/2 p.P p + p.Q u + 1/2 u.R u, with constant or x-dependent blocks.

    ``P``, ``Q``, ``R`` are N x N arrays or callables ``x -> array``.
    """

    name = "quadratic"

    def __init__(self, P, Q=None, R=None):
        if callable(P):
            n = np.asarray(P(0.0)).reshape(-1).size
        else:
            n = np.asarray(P, dtype=float).size
        self.dim = int(round(np.sqrt(n)))
        zero = np.zeros((self.dim, self.dim))
        self.P = P if callable(P) else np.asarray(P, dtype=float).reshape(self.dim, self.dim)
        self.Q = zero if Q is None else (Q if callable(Q) else np.asarray(Q, dtype=float).reshape(self.dim, self.dim))
        self.R = zero if R is None else (R if callable(R) else np.asarray(R, dtype=float).reshape(self.dim, self.dim))
        self.autonomous = not any(callable(c) for c in (self.P, self.Q, self.R))
        if not callable(self.P):
            self.P = 0.5 * (self.P + self.P.T)
        if not callable(self.R):
            self.R = 0.5 * (self.R + self.R.T)

    def _blocks(self, x, u):
        shape = np.broadcast_shapes(np.shape(x), np.shape(u)[:-1])
        xs = np.broadcast_to(np.asarray(x, dtype=float), shape)
        return (_coef(self.P, xs, self.dim), _coef(self.Q, xs, self.dim),
                _coef(self.R, xs, self.dim))

    def value(self, x, u, p):
        P, Q, R = self._blocks(x, u)
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        return (0.5 * np.einsum("...i,...ij,...j->...", p, P, p)
                + np.einsum("...i,...ij,...j->...", p, Q, u)
                + 0.5 * np.einsum("...i,...ij,...j->...", u, R, u))

    def f_p(self, x, u, p):
        P, Q, _ = self._blocks(x, u)
        return np.einsum("...ij,...j->...i", P, p) + np.einsum("...ij,...j->...i", Q, u)

    def f_u(self, x, u, p):
        _, Q, R = self._blocks(x, u)
        return np.einsum("...ji,...j->...i", Q, p) + np.einsum("...ij,...j->...i", R, u)

    def f_pp(self, x, u, p):
        return self._blocks(x, u)[0].copy()

    def f_pu(self, x, u, p):
        return self._blocks(x, u)[1].copy()

    def f_uu(self, x, u, p):
        return self._blocks(x, u)[2].copy()

    def constant_hessian(self):
        if not self.autonomous:
            return None
        return self.P.copy(), self.Q.copy(), self.R.copy()

    def p_polynomial(self, x, u):
        if self.dim != 1:
            return None
        P, Q, R = self._blocks(x, np.asarray(u, dtype=float))
        u = np.asarray(u, dtype=float)[..., 0]
        return np.stack([0.5 * R[..., 0, 0] * u * u, Q[..., 0, 0] * u,
                         0.5 * P[..., 0, 0]], axis=-1)


def reduced_rod_lagrangian(alpha: float, beta: float) -> QuadraticLagrangian:
    """Two-component quadratic whose second variation is the reduced rod form.

    f = 1/2 |p|^2 - alpha p_2 u_1 + 1/2 beta |u|^2, expanded about u = 0.
    """
    Q = np.array([[0.0, 0.0], [-alpha, 0.0]])
    q = QuadraticLagrangian(np.eye(2), Q, beta * np.eye(2))
    q.name = "rod"
    return q


class TwistedRodLagrangian(Lagrangian):
    """Kirchhoff rod in Euler angles under end load and twist.

    f = A/2 (p1^2 + p2^2 sin^2 u1) + C/2 (p3 + p2 cos u1)^2 + F L^2 sin u1 cos u2
    """

    dim = 3
    autonomous = True
    name = "twisted_rod"

    def __init__(self, A: float, C: float, F: float, L: float = 1.0):
        if A <= 0 or C <= 0:
            raise ConfigurationError("rod stiffnesses A and C must be positive")
        self.A, self.C, self.F, self.L = float(A), float(C), float(F), float(L)

    @property
    def load(self) -> float:
        return self.F * self.L ** 2

    def value(self, x, u, p):
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        s, c = np.sin(u[..., 0]), np.cos(u[..., 0])
        twist = p[..., 2] + p[..., 1] * c
        return (0.5 * self.A * (p[..., 0] ** 2 + p[..., 1] ** 2 * s ** 2)
                + 0.5 * self.C * twist ** 2 + self.load * s * np.cos(u[..., 1]))

    def f_p(self, x, u, p):
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        s, c = np.sin(u[..., 0]), np.cos(u[..., 0])
        twist = p[..., 2] + p[..., 1] * c
        return np.stack([self.A * p[..., 0],
                         self.A * p[..., 1] * s ** 2 + self.C * twist * c,
                         self.C * twist], axis=-1)

    def f_u(self, x, u, p):
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        s, c = np.sin(u[..., 0]), np.cos(u[..., 0])
        twist = p[..., 2] + p[..., 1] * c
        d1 = (self.A * p[..., 1] ** 2 * s * c - self.C * twist * p[..., 1] * s
              + self.load * c * np.cos(u[..., 1]))
        d2 = -self.load * s * np.sin(u[..., 1])
        return np.stack([d1, d2, np.zeros_like(d1)], axis=-1)

    def f_pp(self, x, u, p):
        u = np.asarray(u, dtype=float)
        s, c = np.sin(u[..., 0]), np.cos(u[..., 0])
        out = np.zeros(np.broadcast_shapes(u.shape, np.shape(p))[:-1] + (3, 3))
        out[..., 0, 0] = self.A
        out[..., 1, 1] = self.A * s ** 2 + self.C * c ** 2
        out[..., 1, 2] = out[..., 2, 1] = self.C * c
        out[..., 2, 2] = self.C
        return out

    def f_pu(self, x, u, p):
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        s, c = np.sin(u[..., 0]), np.cos(u[..., 0])
        out = np.zeros(np.broadcast_shapes(u.shape, p.shape)[:-1] + (3, 3))
        out[..., 1, 0] = (2 * (self.A - self.C) * p[..., 1] * s * c
                          - self.C * s * p[..., 2])
        out[..., 2, 0] = -self.C * p[..., 1] * s
        return out

    def f_uu(self, x, u, p):
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        s, c = np.sin(u[..., 0]), np.cos(u[..., 0])
        c2, s2 = np.cos(u[..., 1]), np.sin(u[..., 1])
        p2, p3 = p[..., 1], p[..., 2]
        out = np.zeros(np.broadcast_shapes(u.shape, p.shape)[:-1] + (3, 3))
        out[..., 0, 0] = (self.A * p2 ** 2 * (c ** 2 - s ** 2) + self.C * p2 ** 2 * s ** 2
                          - self.C * p2 * c * (p3 + p2 * c) - self.load * s * c2)
        out[..., 0, 1] = out[..., 1, 0] = -self.load * c * s2
        out[..., 1, 1] = -self.load * s * c2
        return out


class ScalarLagrangian(Lagrangian):
    """Autonomous scalar Lagrangian built from a p-polynomial part plus potential.

    f(u, p) = sum_k c_k p^k + V(u), with ``coeffs`` ascending in powers of p.
    """

    dim = 1
    autonomous = True

    def __init__(self, coeffs, potential: Callable, dpotential: Callable,
                 ddpotential: Callable, name: str = "scalar"):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self._V, self._dV, self._ddV = potential, dpotential, ddpotential
        self.name = name
        self._d1 = np.polynomial.polynomial.polyder(self.coeffs)
        self._d2 = np.polynomial.polynomial.polyder(self.coeffs, 2)

    def _poly(self, c, p):
        return np.polynomial.polynomial.polyval(p, c)

    def value(self, x, u, p):
        return self._poly(self.coeffs, np.asarray(p, dtype=float)[..., 0]) + self._V(np.asarray(u, dtype=float)[..., 0])

    def f_p(self, x, u, p):
        return self._poly(self._d1, np.asarray(p, dtype=float)[..., 0])[..., None] + 0 * np.asarray(u)[..., :1]

    def f_u(self, x, u, p):
        return self._dV(np.asarray(u, dtype=float)[..., 0])[..., None] + 0 * np.asarray(p)[..., :1]

    def f_pp(self, x, u, p):
        out = self._poly(self._d2, np.asarray(p, dtype=float)[..., 0]) + 0 * np.asarray(u)[..., 0]
        return out[..., None, None]

    def f_pu(self, x, u, p):
        return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(p))[:-1] + (1, 1))

    def f_uu(self, x, u, p):
        out = self._ddV(np.asarray(u, dtype=float)[..., 0]) + 0 * np.asarray(p)[..., 0]
        return out[..., None, None]

    def p_polynomial(self, x, u):
        u = np.asarray(u, dtype=float)[..., 0]
        out = np.broadcast_to(self.coeffs, u.shape + self.coeffs.shape).copy()
        out[..., 0] += self._V(u)
        return out


def elastica(M: float, K: float) -> ScalarLagrangian:
    """f = 1/2 (p - K)^2 + M cos u."""
    f = ScalarLagrangian([0.5 * K * K, -K, 0.5],
                         lambda u: M * np.cos(u), lambda u: -M * np.sin(u),
                         lambda u: -M * np.cos(u), name="elastica")
    f.M, f.K = float(M), float(K)
    return f


def double_well_a() -> ScalarLagrangian:
    """f = (p^2 - 1)^2 + u^2."""
    return ScalarLagrangian([1.0, 0.0, -2.0, 0.0, 1.0],
                            lambda u: u * u, lambda u: 2 * u,
                            lambda u: 2.0 + 0 * u, name="double_well_a")


def double_well_b() -> ScalarLagrangian:
    """f = p^4/4 - p^3/3 - p^2 + 8/3 + u^2; the p-part has wells at p = -1 and p = 2."""
    return ScalarLagrangian([8.0 / 3.0, 0.0, -1.0, -1.0 / 3.0, 0.25],
                            lambda u: u * u, lambda u: 2 * u,
                            lambda u: 2.0 + 0 * u, name="double_well_b")
