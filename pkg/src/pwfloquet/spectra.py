"""Multipliers from the assembled matrices."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cmp_to_key

import numpy as np
import scipy.linalg

from .discretize import MonodromyMatrices
from .errors import EigenError

__all__ = [
    "MultiplierSet",
    "sort_multipliers",
    "multipliers_standard",
    "multipliers_generalized",
    "multipliers",
    "trivial_index",
    "to_csv",
]

ZERO_FLOOR = 1e-12


def sort_multipliers(mu, rtol: float = 1e-12) -> np.ndarray:
    """Sort by descending modulus, ties by descending real then imaginary part.

    Values within ``rtol`` (relative to the modulus) count as ties, so a
    conjugate pair computed with last-bit differences still comes out
    positive imaginary part first.
    """
    mu = np.asarray(mu, dtype=complex).ravel()
    if mu.size == 0:
        return mu
    tol = rtol * float(np.abs(mu).max())

    def cmp(p, q):
        for x, y in ((abs(p), abs(q)), (p.real, q.real), (p.imag, q.imag)):
            if abs(x - y) > tol:
                return -1 if x > y else 1
        return 0

    # presort so that the tolerant comparison sees a near-total order
    mu = mu[np.lexsort((-mu.imag, -mu.real, -np.abs(mu)))]
    return np.array(sorted(mu, key=cmp_to_key(cmp)), dtype=complex)


@dataclass(frozen=True, eq=False)
class MultiplierSet:
    multipliers: np.ndarray
    method: str
    zero_floor: float = ZERO_FLOOR
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.multipliers.size

    def __getitem__(self, i):
        return self.multipliers[i]

    @property
    def numerically_zero(self) -> np.ndarray:
        """Mask of entries below ``zero_floor`` times the largest modulus."""
        mags = np.abs(self.multipliers)
        if mags.size == 0:
            return mags.astype(bool)
        return mags < self.zero_floor * mags.max()

    def dominant(self, k: int = 4) -> np.ndarray:
        return self.multipliers[:k]

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.multipliers).max()) if len(self) else 0.0


def multipliers_standard(mm: MonodromyMatrices, zero_floor: float = ZERO_FLOOR) -> MultiplierSet:
    """Eigenvalues of the dense matrix ``T``."""
    try:
        mu = scipy.linalg.eigvals(mm.T, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"eigenvalue computation failed: {exc}") from exc
    meta = {"n_bullet": mm.n_bullet, "n_plus": mm.n_plus, "condition": mm.condition}
    return MultiplierSet(sort_multipliers(mu), "standard", zero_floor, meta)


def multipliers_generalized(mm: MonodromyMatrices, zero_floor: float = ZERO_FLOOR) -> MultiplierSet:
    """Finite eigenvalues of the pencil built from the four blocks.

    The problem ``([[T1, T2], [U1, U2]] - I) v = (mu - 1) diag(I, 0) v`` is
    solved with QZ in the equivalent form
    ``[[T1, T2], [U1, U2 - I]] v = mu diag(I, 0) v``, which returns ``mu``
    directly instead of ``mu - 1`` and so keeps small multipliers accurate.
    ``(I - U2)`` is never inverted.  The singular right-hand matrix gives
    infinite eigenvalues, which are dropped together with anything whose
    modulus exceeds ``1 / zero_floor``.
    """
    nb, npl = mm.n_bullet, mm.n_plus
    A = np.block([[mm.T1, mm.T2], [mm.U1, mm.U2 - np.eye(npl)]])
    B = np.zeros((nb + npl, nb + npl))
    B[:nb, :nb] = np.eye(nb)
    try:
        alpha, beta = scipy.linalg.eigvals(A, B, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"QZ failed: {exc}") from exc
    finite = np.abs(beta) > 10 * np.finfo(float).eps * np.abs(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = alpha[finite] / beta[finite]
    mu = mu[np.isfinite(mu) & (np.abs(mu) <= 1.0 / zero_floor)]
    meta = {"n_bullet": nb, "n_plus": npl, "condition": mm.condition,
            "discarded": int(alpha.size - mu.size)}
    return MultiplierSet(sort_multipliers(mu), "generalized", zero_floor, meta)


def multipliers(mm: MonodromyMatrices, method: str = "standard") -> MultiplierSet:
    if method == "standard":
        return multipliers_standard(mm)
    if method == "generalized":
        return multipliers_generalized(mm)
    raise ValueError(f"unknown eigenproblem {method!r}")


def trivial_index(ms) -> int:
    """Index of the multiplier closest to 1."""
    mu = ms.multipliers if isinstance(ms, MultiplierSet) else np.asarray(ms)
    if mu.size == 0:
        raise ValueError("empty multiplier set")
    return int(np.argmin(np.abs(mu - 1.0)))


def to_csv(ms: MultiplierSet) -> str:
    """CSV text with columns ``re, im, abs``, one row per multiplier."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "abs"])
    for mu in ms.multipliers:
        w.writerow([repr(float(mu.real)), repr(float(mu.imag)), repr(float(abs(mu)))])
    return buf.getvalue()
