"""Finite-dimensional approximation of the evolution operator over [0, omega].

Unknowns are laid out as ``(Phi, Psi, W, Z)``:

* ``Phi``/``Psi`` -- values of the renewal/differential history at the
  backward grid (``N-`` points on [-tau_eff, 0]);
* ``W``/``Z`` -- values of the renewal part and of the derivative of the
  differential part at the forward grid (``N+`` points on [0, omega]).

Inside each block entries are grid-point major, component minor.  The
solution on [-tau_eff, omega] is rebuilt from the unknowns as

    x(u) = Phi-interpolant(u)                  for u in the history,
    x(u) = W-interpolant(u)                    for u in the evolution interval,
    y(u) = Psi(0) + int_0^u Z-interpolant      for u > 0,

and collocating the right-hand side at the forward grid gives the fixed
point ``(W, Z) = U1 (Phi, Psi) + U2 (W, Z)``.  Sampling the rebuilt solution
at ``omega + theta_i`` gives ``T1 (Phi, Psi) + T2 (W, Z)``, so that

    T = T1 + T2 (I - U2)^{-1} U1.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .basis import QuadratureRule, eval_rows, integ_rows, make_nodes
from .errors import AssemblyError, DomainError, SingularFixedPointError
from .mesh import STRATEGIES, PiecewiseMesh, build_mesh, locate
from .model import BLOCKS, DelaySystem, validate

__all__ = [
    "ZERO_DIRECTIONS",
    "MethodOptions",
    "MonodromyMatrices",
    "Discretization",
    "mesh_for",
    "state_row",
    "rhs_row",
    "output_row",
    "assemble",
]

log = logging.getLogger(__name__)

ZERO_DIRECTIONS = ("evolution-owned", "delay-owned")


@dataclass(frozen=True)
class MethodOptions:
    """Discretization controls.

    ``zero_direction`` decides which side owns evaluations at exactly u = 0:
    ``evolution-owned`` reads the renewal part from ``W`` there,
    ``delay-owned`` from ``Phi``.  It has no effect on the differential part.
    """

    M: int = 10
    family: str = "cheb-extrema"
    strategy: str = "exact"
    threshold: float = float(np.finfo(float).eps)
    quadrature: QuadratureRule = field(default_factory=QuadratureRule)
    zero_direction: str = "evolution-owned"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"degree M must be a positive integer, got {self.M!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.zero_direction not in ZERO_DIRECTIONS:
            raise ValueError(f"unknown zero direction {self.zero_direction!r}")

    @property
    def quad_nodes(self) -> int:
        return self.quadrature.n or self.M + 1

    def metadata(self) -> dict:
        return {
            "M": self.M,
            "family": self.family,
            "strategy": self.strategy,
            "threshold": self.threshold,
            "quadrature": {"kind": self.quadrature.kind, "n": self.quad_nodes,
                           "tol": self.quadrature.tol},
            "zero_direction": self.zero_direction,
        }


def mesh_for(system: DelaySystem, options: MethodOptions) -> PiecewiseMesh:
    ns = make_nodes(options.family, options.M)
    return build_mesh(system.omega, system.tau, ns, t=system.t, L=system.L,
                      strategy=options.strategy, threshold=options.threshold)


@dataclass(frozen=True, eq=False)
class MonodromyMatrices:
    T1: np.ndarray
    T2: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    T: np.ndarray
    dims: tuple[int, int]
    mesh: PiecewiseMesh = field(repr=False)
    options: MethodOptions = field(repr=False)
    condition: float = float("nan")
    seconds: float = 0.0

    @property
    def n_bullet(self) -> int:
        return self.T.shape[0]

    @property
    def n_plus(self) -> int:
        return self.U2.shape[0]

    def recompute_T(self) -> np.ndarray:
        n = self.n_plus
        return self.T1 + self.T2 @ np.linalg.solve(np.eye(n) - self.U2, self.U1)

    def layout(self) -> dict:
        dX, dY = self.dims
        return {
            "N_minus": self.mesh.N_minus,
            "N_plus": self.mesh.N_plus,
            "n_bullet": self.n_bullet,
            "n_plus": self.n_plus,
            "blocks": ["Phi", "Psi", "W", "Z"],
            "block_sizes": [self.mesh.N_minus * dX, self.mesh.N_minus * dY,
                            self.mesh.N_plus * dX, self.mesh.N_plus * dY],
            "order": "grid-major, component-minor",
        }


class Discretization:
    """Row builders for one (system, mesh, options) triple."""

    def __init__(self, system: DelaySystem, options: MethodOptions, mesh: PiecewiseMesh | None = None):
        self.system = validate(system)
        self.options = options
        self.mesh = mesh if mesh is not None else mesh_for(self.system, options)
        m = self.mesh
        self.ns = m.nodeset
        self.M = m.M
        self.Nm, self.Np = m.N_minus, m.N_plus
        dX, dY = self.system.dims
        self.n_bullet = (dX + dY) * self.Nm
        self.n_plus = (dX + dY) * self.Np
        self.offsets = {
            "x": (0, self.n_bullet, dX),
            "y": (self.Nm * dX, self.n_bullet + self.Np * dX, dY),
        }
        self.zslack = 1e-13 * max(m.omega, m.tau_eff)
        # integral rows of the Z interpolant over whole forward pieces, accumulated
        cum = np.zeros((m.L + 1, self.Np))
        for p in range(m.L):
            a, b = m.forward[p], m.forward[p + 1]
            cum[p + 1] = cum[p]
            cum[p + 1, p * self.M:(p + 1) * self.M + 1] += integ_rows(self.ns, a, b, b)[0]
        self._cum = cum

    # -- scalar state functionals -------------------------------------------

    def _side(self, u: float) -> tuple[str, int, float]:
        m = self.mesh
        if abs(u) <= self.zslack:
            u = 0.0
        if u < -m.tau_eff - 1e-10 * m.tau_eff or u > m.omega + 1e-10 * m.omega:
            raise DomainError(f"state evaluated at {u}, outside [{-m.tau_eff}, {m.omega}]")
        if u < 0 or (u == 0 and self.options.zero_direction == "delay-owned"):
            return "back", locate(m.backward, u), u
        return "fwd", locate(m.forward, u), u

    def rows_on(self, side: str, piece: int, us, kind: str):
        """Scalar rows of the rebuilt state at points ``us`` all lying on one piece.

        Returns ``(back, fwd)`` with shapes ``(len(us), N-)`` and ``(len(us), N+)``.
        """
        us = np.atleast_1d(np.asarray(us, dtype=float))
        m, M = self.mesh, self.M
        back = np.zeros((us.size, self.Nm))
        fwd = np.zeros((us.size, self.Np))
        sl = slice(piece * M, piece * M + M + 1)
        if side == "back":
            a, b = m.backward[piece], m.backward[piece + 1]
            back[:, sl] = eval_rows(self.ns, a, b, np.clip(us, a, b))
        elif kind == "x":
            a, b = m.forward[piece], m.forward[piece + 1]
            fwd[:, sl] = eval_rows(self.ns, a, b, np.clip(us, a, b))
        else:
            a, b = m.forward[piece], m.forward[piece + 1]
            back[:, -1] = 1.0
            fwd[:] = self._cum[piece]
            fwd[:, sl] += integ_rows(self.ns, a, b, np.clip(us, a, b))
        return back, fwd

    def state_rows(self, us, kind: str):
        us = np.atleast_1d(np.asarray(us, dtype=float))
        back = np.zeros((us.size, self.Nm))
        fwd = np.zeros((us.size, self.Np))
        for i, u in enumerate(us):
            side, piece, u = self._side(float(u))
            b, f = self.rows_on(side, piece, [u], kind)
            back[i], fwd[i] = b[0], f[0]
        return back, fwd

    # -- coefficient evaluation ---------------------------------------------

    def _coef(self, fn, args, shape, label):
        try:
            val = np.asarray(fn(*args, self.system.params))
        except Exception as exc:  # noqa: BLE001 - user callbacks may raise anything
            raise AssemblyError(f"coefficient {label} failed at {args}: {exc}") from exc
        if val.shape != shape:
            if val.size == 1 and shape == (1, 1):
                val = val.reshape(1, 1)
            else:
                raise AssemblyError(f"coefficient {label} returned shape {val.shape}, expected {shape}")
        if not np.all(np.isfinite(val)):
            raise AssemblyError(f"coefficient {label} is not finite at {args}")
        return val

    def _place(self, target, contrib, kind):
        """Add ``contrib[a, grid_point, comp]`` (back then fwd points) into ``target``."""
        o_back, o_fwd, d = self.offsets[kind]
        nb = self.Nm * d
        flat = contrib.reshape(contrib.shape[0], -1)
        target[:, o_back:o_back + nb] += flat[:, :nb]
        target[:, o_fwd:o_fwd + self.Np * d] += flat[:, nb:]

    # -- rows ---------------------------------------------------------------

    def rhs_block(self, j: int, eq: str) -> np.ndarray:
        """Rows of ``[U1 | U2]`` for equation ``eq`` ('X' or 'Y') at forward node ``j``."""
        sysm, m = self.system, self.mesh
        if not 0 <= j < self.Np:
            raise IndexError(f"forward node index {j} out of range")
        d_eq = sysm.dims[0 if eq == "X" else 1]
        out = np.zeros((d_eq, self.n_bullet + self.n_plus), dtype=complex)
        Tj = m.grid_forward[j]
        tj = sysm.s + Tj
        taus = (0.0,) + sysm.delays
        for blk in (b for b in BLOCKS if b[0] == eq):
            kind = blk[1].lower()
            shape = sysm.block_dims(blk)
            if 0 in shape:
                continue
            fA = sysm.A[blk]
            if fA is not None:
                K = self._coef(fA, (tj,), shape, f"A{blk}")
                self._add_point(out, K, Tj, kind)
            for k, fB in enumerate(sysm.B[blk]):
                if fB is not None:
                    K = self._coef(fB, (tj,), shape, f"B{blk}[{k + 1}]")
                    self._add_point(out, K, Tj - sysm.delays[k], kind)
            for k, fC in enumerate(sysm.C[blk]):
                if fC is not None:
                    self._add_integral(out, fC, tj, Tj, -taus[k + 1], -taus[k], shape,
                                       f"C{blk}[{k + 1}]", kind)
        return out

    def _add_point(self, out, K, u, kind):
        back, fwd = self.state_rows([u], kind)
        rows = np.concatenate([back[0], fwd[0]])
        self._place(out, K[:, None, :] * rows[None, :, None], kind)

    def _breaks(self):
        m = self.mesh
        return np.union1d(m.backward, m.forward)

    def _add_integral(self, out, fC, tj, Tj, th_lo, th_hi, shape, label, kind):
        m = self.mesh
        lo, hi = Tj + th_lo, Tj + th_hi
        lo = max(lo, -m.tau_eff)
        slack = 1e-12 * max(m.omega, m.tau_eff)
        inner = [p for p in self._breaks() if lo + slack < p < hi - slack]
        edges = [lo] + inner + [hi]
        rule, n = self.options.quadrature, self.options.quad_nodes
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= slack:
                continue
            mid = 0.5 * (a + b)
            if mid < 0:
                side, piece = "back", locate(m.backward, mid)
            else:
                side, piece = "fwd", locate(m.forward, mid)

            def integrand(us, side=side, piece=piece):
                back, fwd = self.rows_on(side, piece, us, kind)
                rows = np.concatenate([back, fwd], axis=1)
                Ks = np.stack([self._coef(fC, (tj, u - Tj), shape, label) for u in us])
                return Ks[:, :, None, :] * rows[:, None, :, None]

            self._place(out, rule.integrate(integrand, a, b, n), kind)

    def output_rows(self, kind: str):
        """Rows of ``[T1 | T2]`` for the ``kind`` part ('x' or 'y') of the state at omega + theta_i."""
        m = self.mesh
        d = self.system.dims[0 if kind == "x" else 1]
        if d == 0:
            return np.zeros((0, self.n_bullet + self.n_plus))
        us = m.omega + m.grid_backward
        us[-1] = m.omega
        back, fwd = self.state_rows(us, kind)
        rows = np.concatenate([back, fwd], axis=1)
        eye = np.eye(d)
        contrib = rows[:, None, :, None] * eye[None, :, None, :]
        out = np.zeros((self.Nm * d, self.n_bullet + self.n_plus))
        self._place(out, contrib.reshape(self.Nm * d, rows.shape[1], d), kind)
        return out

    def assemble(self) -> MonodromyMatrices:
        start = time.perf_counter()
        dX, dY = self.system.dims
        nb, npl = self.n_bullet, self.n_plus
        top = np.vstack([self.output_rows("x"), self.output_rows("y")])
        bottom = np.zeros((npl, nb + npl), dtype=complex)
        for j in range(self.Np):
            if dX:
                bottom[j * dX:(j + 1) * dX] = self.rhs_block(j, "X")
            if dY:
                r0 = self.Np * dX + j * dY
                bottom[r0:r0 + dY] = self.rhs_block(j, "Y")
        if not np.any(bottom.imag):
            bottom = bottom.real
        T1, T2 = top[:, :nb], top[:, nb:]
        U1, U2 = bottom[:, :nb], bottom[:, nb:]
        A = np.eye(npl) - U2
        cond = float(np.linalg.cond(A))
        if not np.isfinite(cond) or cond > 1.0 / (100 * np.finfo(float).eps):
            raise SingularFixedPointError(f"I - U2 is numerically singular (condition {cond:.3e})")
        T = T1 + T2 @ np.linalg.solve(A, U1)
        elapsed = time.perf_counter() - start
        log.debug("assembled %dx%d monodromy matrix in %.3fs", nb, nb, elapsed)
        return MonodromyMatrices(T1, T2, U1, U2, T, (dX, dY), self.mesh, self.options, cond, elapsed)


# -- functional interface ---------------------------------------------------


def state_row(disc: Discretization, u: float, kind: str):
    """Coefficients of the rebuilt state at ``u`` as ``(back, fwd)`` scalar rows."""
    back, fwd = disc.state_rows([u], kind)
    return back[0], fwd[0]


def rhs_row(disc: Discretization, j: int):
    """Rows of ``(U1 | U2)`` collocating both equations at forward node ``j``."""
    dX, dY = disc.system.dims
    parts = []
    if dX:
        parts.append(disc.rhs_block(j, "X"))
    if dY:
        parts.append(disc.rhs_block(j, "Y"))
    rows = np.vstack(parts)
    if not np.any(rows.imag):
        rows = rows.real
    return rows[:, :disc.n_bullet], rows[:, disc.n_bullet:]


def output_row(disc: Discretization, i: int):
    """Rows of ``(T1 | T2)`` for backward node ``i`` (all components)."""
    dX, dY = disc.system.dims
    rows = []
    if dX:
        rows.append(disc.output_rows("x")[i * dX:(i + 1) * dX])
    if dY:
        rows.append(disc.output_rows("y")[i * dY:(i + 1) * dY])
    rows = np.vstack(rows)
    return rows[:, :disc.n_bullet], rows[:, disc.n_bullet:]


def assemble(system: DelaySystem, options: MethodOptions | None = None) -> MonodromyMatrices:
    """Build ``T1, T2, U1, U2`` and the monodromy approximation ``T``."""
    return Discretization(system, options or MethodOptions()).assemble()
