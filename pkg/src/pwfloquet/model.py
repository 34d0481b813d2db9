"""Linear coupled renewal/delay systems and piecewise periodic solutions.

A :class:`DelaySystem` describes

    x(t)  = sum over blocks of  A(t) u(t) + sum_k B_k(t) u(t - tau_k)
                                + sum_k int_{-tau_k}^{-tau_{k-1}} C_k(t, theta) u(t + theta) dtheta
    y'(t) = (same structure)

where ``u`` stands for either the renewal part ``x`` (dimension ``dX``) or the
differential part ``y`` (dimension ``dY``).  Coefficients are keyed by block
name ``"XX"``, ``"XY"``, ``"YX"``, ``"YY"`` (row equation, then column
variable).  ``A``/``B`` entries are called as ``f(t, par)`` and ``C`` entries
as ``f(t, theta, par)``; each returns a ``d_row x d_col`` array (a scalar is
accepted for 1x1 blocks).  ``None`` stands for the zero coefficient.

Coefficient callables must be pure: assembly may call them in any order.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

import numpy as np

from .basis import interpolate, make_nodes
from .errors import ValidationError

__all__ = [
    "BLOCKS",
    "DelaySystem",
    "delay_system",
    "validate",
    "PeriodicSolutionPW",
    "eval_solution",
    "ingest_solution",
    "load_solution",
    "dump_solution",
    "sample_solution",
]

BLOCKS = ("XX", "XY", "YX", "YY")


@dataclass(frozen=True, eq=False)
class DelaySystem:
    dims: tuple[int, int]
    delays: tuple[float, ...]
    omega: float
    s: float = 0.0
    A: Mapping[str, Callable | None] = field(default_factory=dict)
    B: Mapping[str, list] = field(default_factory=dict)
    C: Mapping[str, list] = field(default_factory=dict)
    params: Any = None
    t: tuple[float, ...] | None = None
    L: int | None = None
    name: str | None = None

    @property
    def dX(self) -> int:
        return self.dims[0]

    @property
    def dY(self) -> int:
        return self.dims[1]

    @property
    def p(self) -> int:
        return len(self.delays)

    @property
    def tau(self) -> float:
        return self.delays[-1]

    def block_dims(self, block: str) -> tuple[int, int]:
        return self.dims[0 if block[0] == "X" else 1], self.dims[0 if block[1] == "X" else 1]

    def with_params(self, params) -> "DelaySystem":
        """Same system with a new parameter payload (no re-validation needed)."""
        return replace(self, params=params)


def delay_system(dims, delays, omega, s=0.0, *, par=None, t=None, L=None, name=None,
                 **coefficients) -> DelaySystem:
    """Build and validate a system from keyword coefficients.

    Coefficients are passed as ``AXX=f``, ``BYY=[f1, None]``, ``CXX=[None, k]``
    and so on, mirroring the usual positional layout (dims, delays, omega, s).
    """
    A, B, C = {}, {}, {}
    for key, value in coefficients.items():
        kind, block = key[:1], key[1:]
        if kind not in "ABC" or block not in BLOCKS:
            raise ValidationError(f"unknown coefficient {key!r}")
        {"A": A, "B": B, "C": C}[kind][block] = value
    try:
        delays = tuple(float(d) for d in np.atleast_1d(delays))
    except (TypeError, ValueError):
        raise ValidationError("delays must be real numbers") from None
    sys_ = DelaySystem(tuple(dims), delays, float(omega), float(s), A, B, C, par,
                       None if t is None else tuple(float(v) for v in t), L, name)
    return validate(sys_)


def validate(system: DelaySystem) -> DelaySystem:
    """Check the invariants of ``system`` and return it in normalized form.

    The normalized form has every block present in ``A``, ``B`` and ``C``,
    with ``None`` marking zero coefficients and ``B``/``C`` lists of length
    ``p``.  The operation is idempotent.
    """
    try:
        dX, dY = (int(d) for d in system.dims)
    except (TypeError, ValueError):
        raise ValidationError("dims must be a pair of nonnegative integers") from None
    if dX < 0 or dY < 0 or tuple(system.dims) != (dX, dY):
        raise ValidationError("dims must be nonnegative integers")
    if dX == 0 and dY == 0:
        raise ValidationError("invalid dimensions: dX and dY are both zero")
    delays = tuple(float(d) for d in system.delays)
    if not delays:
        raise ValidationError("at least one delay is required")
    if any(not math.isfinite(d) or d <= 0 for d in delays):
        raise ValidationError("delays must be positive and finite")
    if any(b <= a for a, b in zip(delays[:-1], delays[1:])):
        raise ValidationError("unsorted delays: they must be strictly increasing")
    if not (math.isfinite(system.omega) and system.omega > 0):
        raise ValidationError("omega must be positive")
    p = len(delays)

    for kind, table in (("A", system.A), ("B", system.B), ("C", system.C)):
        for key in table:
            if key not in BLOCKS:
                raise ValidationError(f"unknown coefficient block {kind}{key}")

    A = {}
    for blk in BLOCKS:
        f = system.A.get(blk)
        if f is not None and not callable(f):
            raise ValidationError(f"A{blk} must be callable or None")
        A[blk] = f
    B, C = {}, {}
    for kind, table, out in (("B", system.B, B), ("C", system.C, C)):
        for blk in BLOCKS:
            entries = table.get(blk)
            if entries is None:
                out[blk] = [None] * p
                continue
            entries = list(entries)
            if len(entries) != p:
                raise ValidationError(
                    f"{kind}{blk} has {len(entries)} entries, expected one per delay ({p})"
                )
            if any(e is not None and not callable(e) for e in entries):
                raise ValidationError(f"{kind}{blk} entries must be callable or None")
            out[blk] = entries

    for blk in BLOCKS:
        drow, dcol = (dX if blk[0] == "X" else dY), (dX if blk[1] == "X" else dY)
        present = A[blk] is not None or any(B[blk]) or any(C[blk])
        if present and (drow == 0 or dcol == 0):
            raise ValidationError(f"coefficients for block {blk} given but that dimension is zero")

    if system.t is not None and system.L is not None:
        raise ValidationError("give either the partition t or the piece count L, not both")
    return replace(system, dims=(dX, dY), delays=delays, omega=float(system.omega),
                   s=float(system.s), A=A, B=B, C=C)


# --- periodic solutions ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PeriodicSolutionPW:
    """Piecewise polynomial periodic profile.

    ``values[piece, component, node]`` holds nodal values at the ``node_family``
    nodes mapped to each piece of ``mesh``.
    """

    components: int
    period: float
    mesh: np.ndarray = field(repr=False)
    degree: int
    values: np.ndarray = field(repr=False)
    node_family: str = "cheb-extrema"

    def __post_init__(self):
        object.__setattr__(self, "_nodeset", make_nodes(self.node_family, self.degree))

    def __call__(self, component: int, t: float) -> float:
        return eval_solution(self, component, t)

    def evaluate(self, component: int, t) -> np.ndarray:
        """Vectorised periodic evaluation (1-based ``component``)."""
        t = np.asarray(t, dtype=float)
        tr = np.mod(t, self.period)
        tr = np.where(tr >= self.period, 0.0, tr)
        flat = tr.ravel()
        out = np.empty(flat.size)
        idx = np.clip(np.searchsorted(self.mesh, flat, side="right") - 1, 0, self.mesh.size - 2)
        for piece in np.unique(idx):
            sel = idx == piece
            out[sel] = interpolate(self.values[piece, component - 1], self._nodeset,
                                   self.mesh[piece], self.mesh[piece + 1], flat[sel])
        return out.reshape(t.shape)

    def integrate(self, component: int, a: float, b: float) -> float:
        """Integral of one component over [a, b] (any real a <= b), exact per piece."""
        if b < a:
            return -self.integrate(component, b, a)
        n = math.ceil((self.degree + 1) / 2)
        xi, wi = np.polynomial.legendre.leggauss(max(1, n))
        k0 = math.floor(a / self.period)
        k1 = math.floor(b / self.period)
        cuts = np.concatenate([self.mesh[:-1] + k * self.period for k in range(k0, k1 + 1)])
        cuts = cuts[(cuts > a) & (cuts < b)]
        edges = np.concatenate(([a], cuts, [b]))
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = (hi - lo) / 2
            # evaluate at the subinterval midpoint piece to avoid endpoint ambiguity
            pts = lo + half * (xi + 1)
            total += half * float(wi @ self.evaluate(component, pts))
        return total


def eval_solution(sol: PeriodicSolutionPW, component: int, t: float) -> float:
    """Value of component ``component`` (1-based) at time ``t``, reduced modulo the period."""
    if not 1 <= component <= sol.components:
        raise ValidationError(f"component {component} out of range 1..{sol.components}")
    tr = t - sol.period * math.floor(t / sol.period)
    if tr >= sol.period:
        tr = 0.0
    piece = min(int(np.searchsorted(sol.mesh, tr, side="right")) - 1, sol.mesh.size - 2)
    return float(interpolate(sol.values[piece, component - 1], sol._nodeset,
                             sol.mesh[piece], sol.mesh[piece + 1], tr))


_FIXTURE_KEYS = {"format", "version", "components", "period", "mesh", "degree", "node_family",
                 "values", "continuous", "metadata"}


def ingest_solution(content: str | Mapping) -> PeriodicSolutionPW:
    """Parse a solution fixture (JSON text or an already decoded mapping).

    Continuity violations across piece endpoints only warn: renewal
    components may legitimately jump.
    """
    if isinstance(content, (str, bytes)):
        try:
            data = json.loads(content)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed solution file: {exc}") from None
    else:
        data = dict(content)
    if not isinstance(data, dict):
        raise ValidationError("malformed solution file: top level must be an object")
    unknown = set(data) - _FIXTURE_KEYS
    if unknown:
        raise ValidationError(f"malformed solution file: unknown keys {sorted(unknown)}")
    for key in ("components", "period", "mesh", "degree", "values"):
        if key not in data:
            raise ValidationError(f"malformed solution file: missing {key!r}")
    try:
        d = int(data["components"])
        period = float(data["period"])
        mesh = np.asarray(data["mesh"], dtype=float)
        degree = int(data["degree"])
        values = np.asarray(data["values"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed solution file: {exc}") from None
    family = data.get("node_family", "cheb-extrema")
    if d < 1 or degree < 1 or not period > 0:
        raise ValidationError("malformed solution file: components, degree and period must be positive")
    if mesh.ndim != 1 or mesh.size < 2 or np.any(np.diff(mesh) <= 0):
        raise ValidationError("solution mesh must be strictly increasing with at least two points")
    slack = 1e-10 * period
    if abs(mesh[0]) > slack or abs(mesh[-1] - period) > slack:
        raise ValidationError(f"solution mesh must run from 0 to the period {period}")
    mesh[0], mesh[-1] = 0.0, period
    expected = (mesh.size - 1, d, degree + 1)
    if values.shape != expected:
        raise ValidationError(f"values have shape {values.shape}, expected {expected}")
    if not np.all(np.isfinite(values)):
        raise ValidationError("solution values must be finite")
    sol = PeriodicSolutionPW(d, period, mesh, degree, values, family)

    continuous = data.get("continuous", [True] * d)
    if not isinstance(continuous, list) or len(continuous) != d:
        raise ValidationError(f"'continuous' must be a list with one flag per component ({d})")
    scale = max(1.0, float(np.max(np.abs(values))))
    for c in range(d):
        if not continuous[c]:
            continue
        jumps = np.abs(values[1:, c, 0] - values[:-1, c, -1])
        wrap = abs(values[0, c, 0] - values[-1, c, -1])
        worst = max(float(jumps.max()) if jumps.size else 0.0, wrap)
        if worst > 1e-8 * scale:
            warnings.warn(f"solution component {c + 1} jumps by {worst:.3e} at a piece endpoint",
                          stacklevel=2)
    return sol


def load_solution(path) -> PeriodicSolutionPW:
    with open(path, encoding="utf-8") as fh:
        return ingest_solution(fh.read())


def dump_solution(sol: PeriodicSolutionPW) -> str:
    """Serialize to the fixture format; floats keep 17 significant digits."""
    payload = {
        "format": "pwfloquet-solution",
        "version": 1,
        "components": sol.components,
        "period": sol.period,
        "mesh": sol.mesh.tolist(),
        "degree": sol.degree,
        "node_family": sol.node_family,
        "values": sol.values.tolist(),
    }
    return json.dumps(payload, indent=1)


def sample_solution(funcs, period: float, mesh=None, L: int | None = None, degree: int = 10,
                    node_family: str = "cheb-extrema") -> PeriodicSolutionPW:
    """Sample callables ``funcs[c](t)`` into a :class:`PeriodicSolutionPW`."""
    if callable(funcs):
        funcs = [funcs]
    if mesh is None:
        mesh = np.linspace(0.0, period, (L or 1) + 1)
    mesh = np.asarray(mesh, dtype=float)
    ns = make_nodes(node_family, degree)
    values = np.empty((mesh.size - 1, len(funcs), degree + 1))
    for i, (a, b) in enumerate(zip(mesh[:-1], mesh[1:])):
        pts = ns.mapped(a, b)
        for c, f in enumerate(funcs):
            values[i, c] = [f(x) for x in pts]
    return PeriodicSolutionPW(len(funcs), float(period), mesh, degree, values, node_family)
