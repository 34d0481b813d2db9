"""Builtin linearized systems.

``quadratic-re``
    x(t) = gamma/2 int_{-3}^{-1} (1 - 2 xbar(t+theta)) x(t+theta) dtheta around
    the explicit 4-periodic solution (or a sampled fixture of it).
``belair-mackey``
    platelet-production DDE linearized around a periodic fixture.
``logistic-daphnia``
    coupled renewal/differential consumer-resource model linearized around a
    two-component periodic fixture.
``hayes``
    y'(t) = a y(t) + b y(t - tau), a constant-coefficient DDE.
"""

from __future__ import annotations

import math
from typing import Any, Mapping

import numpy as np

from .errors import ValidationError
from .model import DelaySystem, PeriodicSolutionPW, delay_system

__all__ = ["NAMES", "DEFAULTS", "builtin", "quadratic_re_solution", "belair_mackey_dq"]

DEFAULTS: dict[str, dict[str, float]] = {
    "quadratic-re": {"gamma": 4.0},
    "belair-mackey": {"gamma": 12.0, "q0": 27000.0, "n": 2.133, "theta": 0.04,
                      "tau_m": 9.0, "tau_s": 10.0},
    "logistic-daphnia": {"beta": 2.0, "abar": 3.0, "r": 0.3, "K": 1.0, "gamma": 1.0, "tau": 4.0},
    "hayes": {"a": 0.0, "b": 0.0, "tau": 1.0, "omega": 1.0},
}
NAMES = tuple(DEFAULTS)
NEEDS_SOLUTION = ("belair-mackey", "logistic-daphnia")


def quadratic_re_solution(t, gamma):
    """Explicit periodic solution of the quadratic renewal equation.

    Below the Hopf point ``gamma = 2 + pi/2`` the square root turns imaginary;
    the complex continuation is returned so that root finders can bracket
    across it.
    """
    amp = np.emath.sqrt(0.5 - 1.0 / gamma - math.pi / (2.0 * gamma**2) * (1.0 + math.pi / 4.0))
    return 0.5 + math.pi / (4.0 * gamma) + amp * np.sin(math.pi / 2.0 * t)


def belair_mackey_dq(x, q0, n, theta):
    """Derivative of q(x) = q0 theta^n x / (theta^n + x^n)."""
    tn = theta**n
    xn = x**n
    return q0 * tn * ((1.0 - n) * xn + tn) / (tn + xn) ** 2


def _merge(name, params):
    merged = dict(DEFAULTS[name])
    if params is None:
        return merged
    if not isinstance(params, Mapping):
        raise ValidationError(f"{name} parameters must be given by name")
    unknown = set(params) - set(merged)
    if unknown:
        raise ValidationError(f"unknown parameters for {name}: {sorted(unknown)}")
    merged.update({k: float(v) for k, v in params.items()})
    return merged


def builtin(name: str, params: Mapping[str, Any] | None = None,
            solution: PeriodicSolutionPW | None = None, *, L: int | None = None,
            t=None) -> DelaySystem:
    """Return a validated builtin system.

    When a solution fixture is supplied, its partition becomes the forward
    mesh unless ``L`` or ``t`` is given explicitly.
    """
    if name not in DEFAULTS:
        raise ValidationError(f"unknown builtin system {name!r}; known: {', '.join(NAMES)}")
    if name in NEEDS_SOLUTION and solution is None:
        raise ValidationError(f"solution fixture required for builtin {name!r}")
    par = _merge(name, params)
    if solution is not None and L is None and t is None:
        t = solution.mesh
    return _BUILDERS[name](par, solution, L, t)


def _quadratic_re(par, sol, L, t):
    if sol is None:
        def xbar(u, g):
            return quadratic_re_solution(u, g)
    else:
        if sol.components != 1:
            raise ValidationError("quadratic-re fixture must have one component")

        def xbar(u, g):
            return sol(1, u)

    def kernel(tt, theta, p):
        g = p["gamma"]
        if g == 0:
            return 0.0
        return g / 2.0 * (1.0 - 2.0 * xbar(tt + theta, g))

    return delay_system((1, 0), [1.0, 3.0], 4.0, 0.0, CXX=[None, kernel], par=par,
                        L=L, t=t, name="quadratic-re")


def _belair_mackey(par, sol, L, t):
    if sol.components < 1:
        raise ValidationError("belair-mackey fixture needs one component")

    def b1(tt, p):
        return belair_mackey_dq(sol(1, tt - p["tau_m"]), p["q0"], p["n"], p["theta"])

    def b2(tt, p):
        return (belair_mackey_dq(sol(1, tt - p["tau_m"] - p["tau_s"]), p["q0"], p["n"], p["theta"])
                * math.exp(-p["gamma"] * p["tau_s"]))

    delays = [par["tau_m"], par["tau_m"] + par["tau_s"]]
    return delay_system((0, 1), delays, sol.period, 0.0,
                        AYY=lambda tt, p: -p["gamma"], BYY=[b1, b2], par=par,
                        L=L, t=t, name="belair-mackey")


def _logistic_daphnia(par, sol, L, t):
    if sol.components != 2:
        raise ValidationError("logistic-daphnia fixture needs two components (b, S)")

    def births(tt, p):
        # int_abar^tau bbar(t - a) da
        return sol.integrate(1, tt - p["tau"], tt - p["abar"])

    return delay_system(
        (1, 1), [par["abar"], par["tau"]], sol.period, 0.0,
        AXY=lambda tt, p: p["beta"] * births(tt, p),
        AYY=lambda tt, p: p["r"] * (1.0 - sol(2, tt - p["tau"]) / p["K"]) - p["gamma"] * births(tt, p),
        BYY=[None, lambda tt, p: -p["r"] / p["K"] * sol(2, tt)],
        CXX=[None, lambda tt, theta, p: p["beta"] * sol(2, tt)],
        CYX=[None, lambda tt, theta, p: -p["gamma"] * sol(2, tt)],
        par=par, L=L, t=t, name="logistic-daphnia",
    )


def _hayes(par, sol, L, t):
    return delay_system((0, 1), [par["tau"]], par["omega"], 0.0,
                        AYY=lambda tt, p: p["a"], BYY=[lambda tt, p: p["b"]],
                        par=par, L=L, t=t, name="hayes")


_BUILDERS = {
    "quadratic-re": _quadratic_re,
    "belair-mackey": _belair_mackey,
    "logistic-daphnia": _logistic_daphnia,
    "hayes": _hayes,
}
