"""Stability verdicts, bifurcation search, stability charts, convergence studies."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .discretize import MethodOptions, assemble
from .errors import NoBracketError
from .model import DelaySystem
from .spectra import MultiplierSet, multipliers, trivial_index

__all__ = [
    "compute_multipliers",
    "spectral_test",
    "nontrivial_product",
    "stability_test",
    "nontrivial_test",
    "parameter_sweep",
    "find_bifurcation",
    "StabilityChart",
    "marching_squares",
    "stability_chart",
    "ConvergenceTable",
    "convergence_study",
]

log = logging.getLogger(__name__)


def _mu(ms) -> np.ndarray:
    return ms.multipliers if isinstance(ms, MultiplierSet) else np.asarray(ms, dtype=complex)


def compute_multipliers(system: DelaySystem, options: MethodOptions | None = None,
                        eig: str = "standard") -> MultiplierSet:
    return multipliers(assemble(system, options), eig)


def spectral_test(ms) -> float:
    """max |mu| - 1: negative means every multiplier is inside the unit circle."""
    return float(np.max(np.abs(_mu(ms)))) - 1.0


def nontrivial_product(ms) -> float:
    """prod(|mu| - 1) over all multipliers except the one closest to 1.

    Changes sign when a single real multiplier crosses the unit circle; a
    complex pair crossing leaves the sign unchanged.
    """
    mu = _mu(ms)
    if mu.size == 0:
        raise ValueError("empty multiplier set")
    rest = np.delete(mu, trivial_index(mu))
    return float(np.prod(np.abs(rest) - 1.0))


def stability_test(system, options=None, eig="standard") -> float:
    return spectral_test(compute_multipliers(system, options, eig))


def nontrivial_test(system, options=None, eig="standard") -> float:
    return nontrivial_product(compute_multipliers(system, options, eig))


def parameter_sweep(system: DelaySystem, test: Callable, names: str | Sequence[str],
                    options=None, eig="standard") -> Callable[..., float]:
    """Turn ``test(system, options)`` into a function of the named parameters.

    Only the parameter payload changes between calls; delays and meshes are
    those of ``system``.
    """
    names = [names] if isinstance(names, str) else list(names)

    def f(*values):
        params = dict(system.params or {})
        params.update(zip(names, (float(v) for v in values)))
        return test(system.with_params(params), options, eig)

    return f


def _expand_bracket(f, x0, fx0, max_iter):
    # grow a symmetric window around x0 by sqrt(2) each step until a sign change shows up
    dx = x0 / 50.0 if x0 != 0 else 1.0 / 50.0
    a = b = x0
    fa = fb = fx0
    for _ in range(max_iter):
        dx *= math.sqrt(2.0)
        a = x0 - dx
        fa = f(a)
        if not np.isfinite(fa):
            break
        if (fa > 0) != (fb > 0):
            return (a, fa), (b, fb)
        b = x0 + dx
        fb = f(b)
        if not np.isfinite(fb):
            break
        if (fa > 0) != (fb > 0):
            return (a, fa), (b, fb)
    raise NoBracketError(f"no sign change found around {x0}")


def find_bifurcation(test: Callable[[float], float], start: float | None = None,
                     bracket: tuple[float, float] | None = None, tol: float = 1e-10,
                     max_expansions: int = 60) -> float:
    """Root of a scalar test function by Brent's method.

    Parameters
    ----------
    test : callable
        Continuous near the root.
    start : float, optional
        Starting guess; a window around it is widened geometrically until the
        test changes sign.
    bracket : (float, float), optional
        Interval on which the test already changes sign.
    tol : float
        Relative tolerance on the root.
    """
    if (start is None) == (bracket is None):
        raise ValueError("give exactly one of start or bracket")
    if bracket is not None:
        a, b = map(float, bracket)
        fa, fb = test(a), test(b)
        if fa == 0:
            return a
        if fb == 0:
            return b
        if (fa > 0) == (fb > 0):
            raise NoBracketError(f"test has the same sign at both ends of [{a}, {b}]")
    else:
        x0 = float(start)
        fx0 = test(x0)
        if fx0 == 0:
            return x0
        (a, fa), (b, fb) = _expand_bracket(test, x0, fx0, max_expansions)
    lo, hi = min(a, b), max(a, b)
    log.info("bracket [%r, %r]", lo, hi)
    return float(brentq(test, lo, hi, xtol=1e-300, rtol=max(tol, 4 * np.finfo(float).eps),
                        maxiter=200))


# --- stability charts --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilityChart:
    region: tuple[float, float, float, float]
    step: float
    level: float
    polylines: list = field(repr=False)
    a: np.ndarray = field(repr=False, default=None)
    b: np.ndarray = field(repr=False, default=None)
    values: np.ndarray = field(repr=False, default=None)

    def points(self) -> np.ndarray:
        if not self.polylines:
            return np.empty((0, 2))
        return np.vstack(self.polylines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["polyline", "a", "b"])
        for k, line in enumerate(self.polylines):
            for pa, pb in line:
                w.writerow([k, repr(float(pa)), repr(float(pb))])
        return buf.getvalue()


# corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1); edges: 0 bottom, 1 right, 2 top, 3 left
_EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))
_CORNER_EDGES = {0: (3, 0), 1: (0, 1), 2: (1, 2), 3: (2, 3)}


def marching_squares(a, b, F, level: float = 0.0, center: Callable | None = None) -> list:
    """Level-set polylines of ``F[i, j] = f(a[i], b[j])`` on a rectangular grid.

    Crossings are placed by linear interpolation along cell edges.  Saddle
    cells are disambiguated by ``center(a_mid, b_mid)`` when given, otherwise
    by the mean of the four corners.
    """
    a, b, F = np.asarray(a, float), np.asarray(b, float), np.asarray(F, float)
    above = F > level
    segments = []

    def edge_key(i, j, e):
        return (("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j))[e]

    def crossing(i, j, e):
        corners = ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))
        (i1, j1), (i2, j2) = corners[_EDGE_CORNERS[e][0]], corners[_EDGE_CORNERS[e][1]]
        f1, f2 = F[i1, j1], F[i2, j2]
        s = (level - f1) / (f2 - f1)
        return (a[i1] + s * (a[i2] - a[i1]), b[j1] + s * (b[j2] - b[j1]))

    for i in range(a.size - 1):
        for j in range(b.size - 1):
            up = (above[i, j], above[i + 1, j], above[i + 1, j + 1], above[i, j + 1])
            cut = [e for e, (c1, c2) in enumerate(_EDGE_CORNERS) if up[c1] != up[c2]]
            if not cut:
                continue
            if len(cut) == 2:
                pairs = [tuple(cut)]
            else:
                am, bm = 0.5 * (a[i] + a[i + 1]), 0.5 * (b[j] + b[j + 1])
                fc = center(am, bm) if center is not None else F[i:i + 2, j:j + 2].mean()
                # corners not sharing the centre's side get cut off individually
                lonely = [c for c in range(4) if up[c] != (fc > level)]
                pairs = [_CORNER_EDGES[c] for c in lonely]
            for e1, e2 in pairs:
                segments.append(((edge_key(i, j, e1), crossing(i, j, e1)),
                                 (edge_key(i, j, e2), crossing(i, j, e2))))

    # stitch segments sharing an edge crossing into polylines
    by_key: dict = {}
    for k, (p, q) in enumerate(segments):
        by_key.setdefault(p[0], []).append(k)
        by_key.setdefault(q[0], []).append(k)
    used = [False] * len(segments)

    def walk(k, key):
        chain = []
        while True:
            used[k] = True
            p, q = segments[k]
            nxt = q if p[0] == key else p
            chain.append(nxt[1])
            cand = [m for m in by_key[nxt[0]] if not used[m]]
            if not cand:
                return chain
            k, key = cand[0], nxt[0]

    lines = []
    # open chains start at keys touched by a single segment
    starts = [key for key, ks in by_key.items() if len(ks) == 1]
    for key in starts:
        k = by_key[key][0]
        if used[k]:
            continue
        pt = segments[k][0][1] if segments[k][0][0] == key else segments[k][1][1]
        lines.append(np.array([pt] + walk(k, key)))
    for k in range(len(segments)):
        if not used[k]:
            key, pt = segments[k][0]
            lines.append(np.array([pt] + walk(k, key)))
    return lines


def stability_chart(test: Callable[[float, float], float], region, step: float,
                    level: float = 1e-3) -> StabilityChart:
    """Trace the curve ``test(a, b) = level`` over ``region = (a_min, a_max, b_min, b_max)``."""
    a0, a1, b0, b1 = map(float, region)
    if not step > 0:
        raise ValueError("grid step must be positive")
    if a0 >= a1 or b0 >= b1:
        raise ValueError("region bounds must satisfy min < max")
    a = np.linspace(a0, a1, int(round((a1 - a0) / step)) + 1)
    b = np.linspace(b0, b1, int(round((b1 - b0) / step)) + 1)
    F = np.array([[test(x, y) for y in b] for x in a])
    if not np.all(np.isfinite(F)):
        raise ValueError("test function is not finite on the whole grid")
    lines = marching_squares(a, b, F, level, center=test)
    return StabilityChart((a0, a1, b0, b1), float(step), float(level), lines, a, b, F)


# --- convergence -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConvergenceTable:
    degrees: list
    reference: np.ndarray
    errors: np.ndarray  # shape (len(degrees), len(reference))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["M"] + [f"err{k}" for k in range(self.reference.size)])
        for M, row in zip(self.degrees, self.errors):
            w.writerow([M] + [repr(float(e)) for e in row])
        return buf.getvalue()


def convergence_study(system: DelaySystem, options: MethodOptions | None, M_list: Sequence[int],
                      reference=None, k: int = 4, eig: str = "standard") -> ConvergenceTable:
    """Distance of computed multipliers to reference values as ``M`` grows.

    ``reference`` is a sequence of (complex) target multipliers; when omitted
    the ``k`` dominant multipliers of a run at ``max(M_list)`` are used.  For
    each target the error is the distance to the closest computed multiplier.
    """
    M_list = [int(M) for M in M_list]
    if any(m2 <= m1 for m1, m2 in zip(M_list[:-1], M_list[1:])):
        raise ValueError("M_list must be strictly increasing")
    base = options or MethodOptions()

    def run(M):
        opts = MethodOptions(M, base.family, base.strategy, base.threshold, base.quadrature,
                             base.zero_direction)
        return compute_multipliers(system, opts, eig).multipliers

    if reference is None:
        ref = run(M_list[-1])[:k]
    else:
        ref = np.atleast_1d(np.asarray(reference, dtype=complex))
    errs = []
    for M in M_list:
        mu = run(M)
        errs.append([float(np.min(np.abs(mu - r))) for r in ref])
    return ConvergenceTable(M_list, ref, np.array(errs))
