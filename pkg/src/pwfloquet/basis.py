"""Collocation nodes, barycentric interpolation and quadrature on a single piece.

All node families live on the reference interval [0, 1] and always contain
both endpoints, so that adjacent pieces share their boundary values.
Interpolants on a physical piece [a, b] are handled through the affine map
``x = a + (b - a) * c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, InvalidDegreeError, QuadratureError

__all__ = [
    "NodeSet",
    "QuadratureRule",
    "make_nodes",
    "register_family",
    "families",
    "interpolate",
    "eval_row",
    "eval_rows",
    "integ_row",
    "integ_rows",
    "cc_nodes_weights",
    "clenshaw_curtis",
    "quad",
    "register_quadrature",
]

_EPS = np.finfo(float).eps


def _product_weights(nodes: np.ndarray) -> np.ndarray:
    # log-sum form so that large M neither underflows nor overflows
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    sign = np.prod(np.sign(diff), axis=1)
    logmag = -np.sum(np.log(np.abs(diff)), axis=1)
    return sign * np.exp(logmag - logmag.max())


def _cheb_extrema(M):
    j = np.arange(M + 1)
    nodes = (1.0 - np.cos(j * np.pi / M)) / 2.0
    bw = np.ones(M + 1)
    bw[0] = bw[-1] = 0.5
    return nodes, bw * (-1.0) ** j


def _equidistant(M):
    return np.arange(M + 1) / M, None


def _cheb_zeros(M):
    m = M - 1
    k = np.arange(1, m + 1)
    inner = np.sort((1.0 - np.cos((2 * k - 1) * np.pi / (2 * m))) / 2.0) if m else np.empty(0)
    return np.concatenate(([0.0], inner, [1.0])), None


def _legendre_zeros(M):
    m = M - 1
    inner = (leggauss(m)[0] + 1.0) / 2.0 if m else np.empty(0)
    return np.concatenate(([0.0], np.sort(inner), [1.0])), None


_FAMILIES: dict[str, Callable] = {
    "cheb-extrema": _cheb_extrema,
    "equidistant": _equidistant,
    "cheb-zeros-plus-endpoints": _cheb_zeros,
    "legendre-zeros-plus-endpoints": _legendre_zeros,
}


def register_family(name: str, builder: Callable) -> None:
    """Register a new collocation node family.

    ``builder(M)`` must return ``(nodes, weights)`` with ``M + 1`` strictly
    increasing nodes in [0, 1] starting at 0 and ending at 1.  ``weights`` may
    be ``None``, in which case the product formula is used.
    """
    _FAMILIES[name] = builder


def families() -> list[str]:
    return sorted(_FAMILIES)


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Reference collocation nodes on [0, 1] with barycentric weights."""

    family: str
    M: int
    nodes: np.ndarray = field(repr=False)
    bary_weights: np.ndarray = field(repr=False)

    def mapped(self, a: float, b: float) -> np.ndarray:
        x = a + (b - a) * self.nodes
        x[0], x[-1] = a, b
        return x


def make_nodes(family: str, M: int) -> NodeSet:
    """Build the node set of a family for polynomial degree ``M``.

    Barycentric weights are scaled so that the largest has magnitude 1.
    """
    if int(M) != M or M < 1:
        raise InvalidDegreeError(f"polynomial degree must be a positive integer, got {M!r}")
    M = int(M)
    try:
        builder = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown node family {family!r}; known: {', '.join(families())}") from None
    nodes, weights = builder(M)
    nodes = np.asarray(nodes, dtype=float)
    if nodes.shape != (M + 1,) or nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0):
        raise ValueError(f"family {family!r} produced invalid nodes for M={M}")
    weights = _product_weights(nodes) if weights is None else np.asarray(weights, dtype=float)
    weights = weights / np.max(np.abs(weights))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return NodeSet(family, M, nodes, weights)


def eval_rows(ns: NodeSet, a: float, b: float, x) -> np.ndarray:
    """Vectorised :func:`eval_row`: one row per entry of ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    c = (x - a) / (b - a)
    diff = c[:, None] - ns.nodes[None, :]
    # coincidence with a node: return the unit row exactly
    hit = np.abs(diff) <= 4 * _EPS * np.maximum(1.0, np.abs(c))[:, None]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = ns.bary_weights / diff
        rows = terms / terms.sum(axis=1, keepdims=True)
    on_node = hit.any(axis=1)
    if on_node.any():
        idx = np.argmax(hit[on_node], axis=1)
        unit = np.zeros((idx.size, ns.M + 1))
        unit[np.arange(idx.size), idx] = 1.0
        rows[on_node] = unit
    return rows


def eval_row(ns: NodeSet, a: float, b: float, x: float) -> np.ndarray:
    """Coefficients ``r`` with ``interpolant(x) = r @ values``."""
    return eval_rows(ns, a, b, x)[0]


def interpolate(values, ns: NodeSet, a: float, b: float, x):
    """Evaluate the interpolant of ``values`` at the mapped nodes of [a, b].

    ``values`` may carry trailing axes (one interpolant per column).  Points
    outside [a, b] are extrapolated; callers are expected to guard.
    """
    values = np.asarray(values)
    rows = eval_rows(ns, a, b, x)
    out = rows @ values
    return out[0] if np.ndim(x) == 0 else out


def _gl(M):
    return leggauss(max(1, math.ceil((M + 1) / 2)))


def integ_rows(ns: NodeSet, a: float, b: float, t) -> np.ndarray:
    """Vectorised :func:`integ_row` over an array of upper limits ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    slack = 1e-12 * (b - a)
    if np.any(t < a - slack) or np.any(t > b + slack):
        raise DomainError(f"upper limit outside [{a}, {b}]")
    t = np.clip(t, a, b)
    xi, wi = _gl(ns.M)
    half = (t - a) / 2.0
    pts = a + half[:, None] * (xi[None, :] + 1.0)
    rows = eval_rows(ns, a, b, pts.ravel()).reshape(t.size, xi.size, ns.M + 1)
    return np.einsum("g,tgj->tj", wi, rows) * half[:, None]


def integ_row(ns: NodeSet, a: float, b: float, t: float) -> np.ndarray:
    """Coefficients of the integral over [a, t] of the interpolant on [a, b].

    Uses the Gauss-Legendre rule with ceil((M+1)/2) points, which is exact
    for the degree-M interpolant.
    """
    return integ_rows(ns, a, b, t)[0]


# --- quadrature -------------------------------------------------------------


def cc_nodes_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Clenshaw-Curtis nodes (ascending) and weights on [-1, 1] with ``n`` points."""
    if n < 2:
        raise ValueError("Clenshaw-Curtis needs at least 2 nodes")
    N = n - 1
    theta = np.pi * np.arange(N + 1) / N
    x = np.cos(theta)
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    ii = np.arange(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(N * theta[ii]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / N
    return x[::-1].copy(), w[::-1].copy()


def _cc_vec(f, a, b, n):
    x, w = cc_nodes_weights(n)
    half = (b - a) / 2.0
    pts = a + half * (x + 1.0)
    pts[0], pts[-1] = a, b
    vals = np.asarray(f(pts))
    return half * np.tensordot(w, vals, axes=(0, 0))


def clenshaw_curtis(f: Callable[[float], float], a: float, b: float, n: int) -> float:
    """Clenshaw-Curtis approximation of the integral of scalar ``f`` over [a, b]."""
    if a == b:
        return 0.0
    return float(_cc_vec(lambda xs: np.array([f(x) for x in xs]), a, b, n))


def _adaptive_vec(f, a, b, n, tol, max_depth=40):
    def rec(lo, hi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        left = _cc_vec(f, lo, mid, n)
        right = _cc_vec(f, mid, hi, n)
        both = left + right
        if np.max(np.abs(both - whole)) <= tol:
            return both
        if depth >= max_depth:
            raise QuadratureError(f"adaptive quadrature did not converge on [{lo}, {hi}]")
        return rec(lo, mid, left, tol / 2, depth + 1) + rec(mid, hi, right, tol / 2, depth + 1)

    return rec(a, b, _cc_vec(f, a, b, n), tol, 0)


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature choice for the distributed-delay integrals.

    ``n`` is the node count per panel; ``None`` defers to the caller (the
    discretization uses ``M + 1``).  ``tol`` is only used by the adaptive kind.
    """

    kind: str = "clenshaw-curtis"
    n: int | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in _QUADRATURES:
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.n is not None and self.n < 2:
            raise ValueError("quadrature node count must be at least 2")
        if self.tol <= 0:
            raise ValueError("quadrature tolerance must be positive")

    def integrate(self, f, a: float, b: float, n_default: int = 9):
        """Integrate a vectorised integrand ``f(points) -> array[len(points), ...]``."""
        if a == b:
            return np.zeros_like(np.asarray(f(np.array([a])))[0])
        return _QUADRATURES[self.kind](f, a, b, self.n or n_default, self.tol)


_QUADRATURES: dict[str, Callable] = {
    "clenshaw-curtis": lambda f, a, b, n, tol: _cc_vec(f, a, b, n),
    "adaptive": _adaptive_vec,
}


def register_quadrature(kind: str, integrator: Callable) -> None:
    """Register ``integrator(f, a, b, n, tol)`` acting on vectorised integrands."""
    _QUADRATURES[kind] = integrator


def quad(rule: QuadratureRule, f: Callable[[float], float], a: float, b: float) -> float:
    """Integrate scalar ``f`` over [a, b] with ``rule``."""
    if a == b:
        return 0.0
    return float(rule.integrate(lambda xs: np.array([f(x) for x in xs]), a, b))
