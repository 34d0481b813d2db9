"""Forward/backward partitions and the global collocation grids.

The forward partition covers the evolution interval [0, omega].  The history
interval [-tau, 0] is partitioned by shifting the forward points back by
multiples of omega, with a choice of how to treat the leftmost incomplete
piece:

``exact``
    start the partition at ``-tau`` (possibly leaving a very short piece);
``extend``
    start at the closest shifted point left of ``-tau``, enlarging the
    history to ``tau_eff >= tau``;
``exact-drop``
    ``exact`` unless the leftmost piece is shorter than ``threshold * omega``,
    in which case fall back to ``extend``;
``exact-merge``
    ``exact`` unless the leftmost piece is too short, in which case it is
    merged with its right neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import NodeSet
from .errors import DelayTooSmallError, DomainError, MeshError, MeshMismatchError

__all__ = [
    "STRATEGIES",
    "PiecewiseMesh",
    "build_forward",
    "build_backward",
    "build_grids",
    "build_mesh",
    "locate",
]

STRATEGIES = ("exact", "extend", "exact-drop", "exact-merge")


def build_forward(omega: float, t=None, L: int | None = None) -> np.ndarray:
    """Partition of [0, omega] from explicit endpoints ``t`` or ``L`` uniform pieces.

    With neither given a single piece is used.
    """
    if not omega > 0:
        raise MeshError(f"omega must be positive, got {omega}")
    if t is not None and L is not None:
        raise MeshError("give either explicit endpoints t or a piece count L, not both")
    if t is None:
        L = 1 if L is None else L
        if int(L) != L or L < 1:
            raise MeshError(f"piece count must be a positive integer, got {L!r}")
        pts = np.linspace(0.0, omega, int(L) + 1)
    else:
        pts = np.array(t, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise MeshError("explicit partition needs at least two endpoints")
        slack = 1e-10 * omega
        if abs(pts[0]) > slack or abs(pts[-1] - omega) > slack:
            raise MeshMismatchError(
                f"partition must run from 0 to omega={omega}, got [{pts[0]}, {pts[-1]}]"
            )
        if np.any(np.diff(pts) <= 0):
            raise MeshError("partition endpoints must be strictly increasing")
    pts[0], pts[-1] = 0.0, omega
    return pts


def build_backward(forward, omega: float, tau: float, strategy: str = "exact",
                   threshold: float = np.finfo(float).eps) -> tuple[np.ndarray, float]:
    """Partition of [-tau_eff, 0] obtained by shifting ``forward`` back by k*omega.

    Returns
    -------
    backward : ndarray
        Strictly increasing endpoints ending at 0.
    tau_eff : float
        Length of the history interval actually discretized.
    """
    if strategy not in STRATEGIES:
        raise MeshError(f"unknown strategy {strategy!r}; known: {', '.join(STRATEGIES)}")
    if threshold < 0:
        raise MeshError("threshold must be nonnegative")
    if not tau > threshold * omega:
        raise DelayTooSmallError(f"maximum delay {tau} too small relative to omega={omega}")
    forward = np.asarray(forward, dtype=float)
    kmax = int(np.ceil((tau + omega) / omega)) + 1
    cand = np.concatenate([forward - k * omega for k in range(1, kmax + 1)])
    slack = 1e-10 * max(tau, omega)
    cand = np.sort(cand[(cand >= -tau - omega - slack) & (cand <= slack)])
    # shifted copies of 0 and omega coincide; keep one of each cluster
    keep = np.concatenate(([True], np.diff(cand) > slack))
    pts = cand[keep]
    pts[-1] = 0.0

    hit = np.abs(pts + tau) <= slack
    if hit.any():
        out = pts[np.argmax(hit):].copy()
        out[0] = -tau
        return out, float(tau)

    i2 = int(np.searchsorted(pts, -tau))  # pts[i2 - 1] < -tau < pts[i2]
    theta1, theta2 = pts[i2 - 1], pts[i2]
    tiny = theta2 + tau < threshold * omega
    if strategy == "extend" or (strategy == "exact-drop" and tiny):
        return pts[i2 - 1:].copy(), float(-theta1)
    if strategy == "exact-merge" and tiny:
        return np.concatenate(([-tau], pts[i2 + 1:])), float(tau)
    return np.concatenate(([-tau], pts[i2:])), float(tau)


def build_grids(forward, backward, ns: NodeSet) -> tuple[np.ndarray, np.ndarray]:
    """Global node grids (backward, forward) with shared endpoints stored once."""

    def grid(part):
        pieces = [ns.mapped(a, b)[:-1] for a, b in zip(part[:-1], part[1:])]
        return np.concatenate(pieces + [[part[-1]]])

    return grid(np.asarray(backward, float)), grid(np.asarray(forward, float))


def locate(partition, x: float, slack: float | None = None) -> int:
    """Index ``i`` of the piece ``[p[i], p[i+1]]`` containing ``x``.

    Interior endpoints belong to the piece on their left.
    """
    p = np.asarray(partition)
    if slack is None:
        slack = 1e-10 * (p[-1] - p[0])
    if x < p[0] - slack or x > p[-1] + slack:
        raise DomainError(f"{x} outside [{p[0]}, {p[-1]}]")
    i = int(np.searchsorted(p, x, side="left")) - 1
    return min(max(i, 0), p.size - 2)


@dataclass(frozen=True, eq=False)
class PiecewiseMesh:
    omega: float
    tau: float
    tau_eff: float
    forward: np.ndarray = field(repr=False)
    backward: np.ndarray = field(repr=False)
    nodeset: NodeSet = field(repr=False)
    grid_backward: np.ndarray = field(repr=False)
    grid_forward: np.ndarray = field(repr=False)
    strategy: str = "exact"

    @property
    def M(self) -> int:
        return self.nodeset.M

    @property
    def L(self) -> int:
        return self.forward.size - 1

    @property
    def L_minus(self) -> int:
        return self.backward.size - 1

    @property
    def N_minus(self) -> int:
        return self.grid_backward.size

    @property
    def N_plus(self) -> int:
        return self.grid_forward.size

    def metadata(self) -> dict:
        return {
            "strategy": self.strategy,
            "tau": self.tau,
            "tau_eff": self.tau_eff,
            "L": self.L,
            "L_minus": self.L_minus,
            "M": self.M,
            "family": self.nodeset.family,
            "forward": self.forward.tolist(),
            "backward": self.backward.tolist(),
        }


def build_mesh(omega, tau, ns: NodeSet, t=None, L=None, strategy="exact",
               threshold=np.finfo(float).eps) -> PiecewiseMesh:
    forward = build_forward(omega, t=t, L=L)
    backward, tau_eff = build_backward(forward, omega, tau, strategy, threshold)
    gb, gf = build_grids(forward, backward, ns)
    for arr in (forward, backward, gb, gf):
        arr.setflags(write=False)
    return PiecewiseMesh(float(omega), float(tau), tau_eff, forward, backward, ns, gb, gf, strategy)
