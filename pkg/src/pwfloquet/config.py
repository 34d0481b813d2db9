"""JSON run configuration: system source, method options, command settings.

Every section is parsed strictly; an unknown key is an error naming the key.
See the README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import catalog, exprlang
from .basis import QuadratureRule, families
from .discretize import ZERO_DIRECTIONS, MethodOptions
from .errors import ConfigError, ExprSyntaxError, FloquetError
from .mesh import STRATEGIES
from .model import BLOCKS, DelaySystem, PeriodicSolutionPW, delay_system, load_solution

__all__ = ["RunConfig", "load_config", "parse_config", "build_system", "build_options",
           "coefficient_from_exprs"]

SECTIONS = {"system", "method", "eig", "multipliers", "bifurcate", "chart", "convergence",
            "output", "verbosity"}
SYSTEM_KEYS = {"builtin", "params", "solution", "dims", "delays", "omega", "s",
               "coefficients", "L", "t"}
METHOD_KEYS = {"M", "family", "strategy", "threshold", "quadrature", "zero_direction"}
QUAD_KEYS = {"kind", "n", "tol"}
SECTION_KEYS = {
    "multipliers": {"top"},
    "bifurcate": {"parameter", "start", "bracket", "test", "tol"},
    "chart": {"parameters", "region", "step", "level"},
    "convergence": {"degrees", "reference", "k"},
    "output": {"dir", "formats", "dump_matrices"},
}
FORMATS = ("csv", "json", "svg")


def _strict(section: str, data: Any, allowed: set) -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in section {section!r}")
    return data


@dataclass
class RunConfig:
    system: dict = field(default_factory=dict)
    method: dict = field(default_factory=dict)
    eig: str = "standard"
    multipliers: dict = field(default_factory=dict)
    bifurcate: dict = field(default_factory=dict)
    chart: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    verbosity: int = 0
    base_dir: Path = field(default_factory=Path.cwd)


def parse_config(data: dict, base_dir: Path | str = ".") -> RunConfig:
    data = _strict("<top level>", data, SECTIONS)
    cfg = RunConfig(base_dir=Path(base_dir))
    cfg.system = dict(_strict("system", data.get("system"), SYSTEM_KEYS))
    cfg.method = dict(_strict("method", data.get("method"), METHOD_KEYS))
    if "quadrature" in cfg.method:
        _strict("method.quadrature", cfg.method["quadrature"], QUAD_KEYS)
    for name, keys in SECTION_KEYS.items():
        setattr(cfg, name, dict(_strict(name, data.get(name), keys)))
    cfg.eig = data.get("eig", "standard")
    if cfg.eig not in ("standard", "generalized"):
        raise ConfigError(f"eig must be 'standard' or 'generalized', got {cfg.eig!r}")
    cfg.verbosity = int(data.get("verbosity", 0))
    fmts = cfg.output.get("formats", ["csv"])
    if isinstance(fmts, str):
        fmts = [fmts]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output format(s) {bad}")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return parse_config(data, path.parent)


def build_options(method: dict) -> MethodOptions:
    m = dict(method)
    quad = m.pop("quadrature", None) or {}
    try:
        rule = QuadratureRule(quad.get("kind", "clenshaw-curtis"), quad.get("n"), quad.get("tol", 1e-10))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "family" in m and m["family"] not in families():
        raise ConfigError(f"unknown node family {m['family']!r}")
    if "strategy" in m and m["strategy"] not in STRATEGIES:
        raise ConfigError(f"unknown strategy {m['strategy']!r}")
    if "zero_direction" in m and m["zero_direction"] not in ZERO_DIRECTIONS:
        raise ConfigError(f"unknown zero direction {m['zero_direction']!r}")
    kwargs = {"M": int(m.get("M", 10)), "family": m.get("family", "cheb-extrema"),
              "strategy": m.get("strategy", "exact"),
              "zero_direction": m.get("zero_direction", "evolution-owned"), "quadrature": rule}
    if "threshold" in m:
        kwargs["threshold"] = float(m["threshold"])
    try:
        return MethodOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _as_matrix(entry, label):
    if isinstance(entry, (str, int, float)):
        entry = [[entry]]
    if not isinstance(entry, list) or not entry or not all(isinstance(r, list) for r in entry):
        raise ConfigError(f"{label} must be an expression or a matrix of expressions")
    width = len(entry[0])
    if any(len(r) != width for r in entry):
        raise ConfigError(f"{label} rows have different lengths")
    out = []
    for r, row in enumerate(entry):
        parsed = []
        for c, cell in enumerate(row):
            if isinstance(cell, bool) or not isinstance(cell, (str, int, float)):
                raise ConfigError(f"{label}[{r}][{c}] must be a string or number")
            try:
                parsed.append(exprlang.parse(str(cell)))
            except ExprSyntaxError as exc:
                raise ConfigError(f"{label}[{r}][{c}]: {exc}") from None
        out.append(parsed)
    return out


def coefficient_from_exprs(entry, label: str, shape: tuple[int, int], kernel: bool,
                           sol: PeriodicSolutionPW | None):
    """Callable coefficient from a matrix of expression strings."""
    nodes = _as_matrix(entry, label)
    if (len(nodes), len(nodes[0])) != shape:
        raise ConfigError(f"{label} has shape {(len(nodes), len(nodes[0]))}, expected {shape}")
    names = set().union(*(exprlang.free_names(n) for row in nodes for n in row))
    if not kernel and "theta" in names:
        raise ConfigError(f"{label} uses theta, which is only defined for distributed kernels")
    if "sol" in names and sol is None:
        raise ConfigError(f"{label} uses sol(...) but no solution fixture is given")
    fns = [[exprlang.compile_expr(n) for n in row] for row in nodes]

    def evaluate(t, theta, par):
        with np.errstate(all="ignore"):
            return np.array([[f(t, theta, par, sol) for f in row] for row in fns], dtype=float)

    if kernel:
        return lambda t, theta, par: evaluate(t, theta, par)
    return lambda t, par: evaluate(t, 0.0, par)


def _solution(system_cfg, base_dir):
    path = system_cfg.get("solution")
    if path is None:
        return None
    path = Path(path)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigError(f"solution fixture {path} does not exist")
    return load_solution(path)


def build_system(cfg: RunConfig) -> DelaySystem:
    """Turn the ``system`` section into a validated :class:`DelaySystem`."""
    sc = cfg.system
    has_builtin = "builtin" in sc
    has_inline = any(k in sc for k in ("dims", "delays", "omega", "coefficients"))
    if has_builtin == has_inline:
        raise ConfigError("system needs exactly one source: 'builtin' or an inline definition")
    sol = _solution(sc, cfg.base_dir)
    try:
        if has_builtin:
            return catalog.builtin(sc["builtin"], sc.get("params"), sol, L=sc.get("L"), t=sc.get("t"))
        for key in ("dims", "delays", "omega"):
            if key not in sc:
                raise ConfigError(f"inline system is missing {key!r}")
        dims = tuple(int(d) for d in sc["dims"])
        if len(dims) != 2:
            raise ConfigError("dims must have two entries [dX, dY]")
        delays = list(np.atleast_1d(sc["delays"]).astype(float))
        p = len(delays)
        coeffs = {}
        raw = sc.get("coefficients") or {}
        for key, entry in raw.items():
            kind, blk = key[:1], key[1:]
            if kind not in "ABC" or blk not in BLOCKS or len(key) != 3:
                raise ConfigError(f"unknown coefficient {key!r}")
            shape = (dims[0 if blk[0] == "X" else 1], dims[0 if blk[1] == "X" else 1])
            if kind == "A":
                coeffs[key] = coefficient_from_exprs(entry, key, shape, False, sol)
                continue
            if not isinstance(entry, list) or len(entry) != p:
                raise ConfigError(f"{key} must be a list with one entry (or null) per delay ({p})")
            coeffs[key] = [
                None if e is None else
                coefficient_from_exprs(e, f"{key}[{k + 1}]", shape, kind == "C", sol)
                for k, e in enumerate(entry)
            ]
        return delay_system(dims, delays, float(sc["omega"]), float(sc.get("s", 0.0)),
                            par=sc.get("params"), t=sc.get("t"), L=sc.get("L"), **coeffs)
    except ConfigError:
        raise
    except FloquetError as exc:
        raise ConfigError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system definition: {exc}") from None

