"""Command-line front end.

Usage examples::

    pwfloquet multipliers --builtin quadratic-re --param gamma=4
    pwfloquet bifurcate --builtin quadratic-re --parameter gamma --start 4
    pwfloquet chart --builtin hayes --parameters a b --region -2 2 -2 2 --step 0.1 --format svg
    pwfloquet convergence --builtin hayes --param a=1 --degrees 4 8 12 --reference 2.718281828459045
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import scipy.io

from . import __version__
from .analysis import (convergence_study, find_bifurcation, nontrivial_test, parameter_sweep,
                       stability_chart, stability_test)
from .basis import families
from .config import FORMATS, RunConfig, build_options, build_system, load_config, parse_config
from .discretize import ZERO_DIRECTIONS, MonodromyMatrices, assemble
from .errors import ConfigError, FloquetError
from .mesh import STRATEGIES
from .model import load_solution
from .spectra import multipliers, to_csv

log = logging.getLogger("pwfloquet")

SCHEMA_VERSION = 1
MATRIX_NAMES = ("T", "T1", "T2", "U1", "U2")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system and method")
    g.add_argument("--config", type=Path, help="JSON run configuration")
    g.add_argument("--builtin", help="builtin system name")
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="set a system parameter (repeatable)")
    g.add_argument("--solution", type=Path, help="periodic solution fixture (JSON)")
    g.add_argument("--pieces", type=int, metavar="L", help="uniform pieces on [0, omega]")
    g.add_argument("--degree", type=int, metavar="M")
    g.add_argument("--family", choices=families())
    g.add_argument("--strategy", choices=STRATEGIES)
    g.add_argument("--threshold", type=float)
    g.add_argument("--zero-direction", choices=ZERO_DIRECTIONS)
    g.add_argument("--eig", choices=("standard", "generalized"))
    o = p.add_argument_group("output")
    o.add_argument("--out", type=Path, help="output directory")
    o.add_argument("--format", action="append", default=None,
                   help="csv, json or svg; repeatable or comma separated")
    o.add_argument("--verbosity", type=int, choices=(0, 1, 2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwfloquet",
        description="Floquet multipliers of linear renewal/delay equations by piecewise collocation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("multipliers", help="compute multipliers")
    _common(p)
    p.add_argument("--top", type=int, help="number of dominant multipliers printed (default 4)")
    p.add_argument("--dump-matrices", action="store_true",
                   help="write T, T1, T2, U1, U2 as Matrix Market files")

    p = sub.add_parser("bifurcate", help="locate a bifurcation in one parameter")
    _common(p)
    p.add_argument("--parameter")
    p.add_argument("--start", type=float)
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--test", choices=("nontrivial", "stability"))
    p.add_argument("--tol", type=float)

    p = sub.add_parser("chart", help="trace a stability chart in two parameters")
    _common(p)
    p.add_argument("--parameters", nargs=2, metavar=("A", "B"))
    p.add_argument("--region", type=float, nargs=4, metavar=("AMIN", "AMAX", "BMIN", "BMAX"))
    p.add_argument("--step", type=float)
    p.add_argument("--level", type=float)

    p = sub.add_parser("convergence", help="multiplier errors as the degree grows")
    _common(p)
    p.add_argument("--degrees", type=int, nargs="+")
    p.add_argument("--reference", action="append", default=None,
                   help="reference multiplier 're' or 're,im' (repeatable); default: finest run")
    p.add_argument("--k", type=int, help="dominant multipliers tracked without a reference")

    p = sub.add_parser("from-dump", help="recompute multipliers from dumped matrices")
    p.add_argument("directory", type=Path)
    p.add_argument("--eig", choices=("standard", "generalized"), default="standard")
    p.add_argument("--top", type=int, default=4)
    return parser


def _param_value(text):
    try:
        return float(text)
    except ValueError:
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            return text


def _merge(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config({})
    sc = cfg.system
    if args.builtin:
        for key in ("dims", "delays", "omega", "coefficients", "builtin"):
            sc.pop(key, None)
        sc["builtin"] = args.builtin
    if args.solution:
        sc["solution"] = str(args.solution.resolve())
    if args.pieces is not None:
        sc["L"] = args.pieces
        sc.pop("t", None)
    if args.param:
        params = dict(sc.get("params") or {})
        for item in args.param:
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
            params[key.strip()] = _param_value(value.strip())
        sc["params"] = params
    if not sc:
        raise ConfigError("no system given: use --builtin NAME or --config PATH")
    m = cfg.method
    for flag, key in (("degree", "M"), ("family", "family"), ("strategy", "strategy"),
                      ("threshold", "threshold"), ("zero_direction", "zero_direction")):
        val = getattr(args, flag)
        if val is not None:
            m[key] = val
    if args.eig:
        cfg.eig = args.eig
    if args.out:
        cfg.output["dir"] = str(args.out)
    if args.format:
        fmts = [f.strip() for item in args.format for f in item.split(",") if f.strip()]
        bad = [f for f in fmts if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output format(s) {bad}")
        cfg.output["formats"] = fmts
    if args.verbosity is not None:
        cfg.verbosity = args.verbosity
    return cfg


def _setup_logging(verbosity):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def _outdir(cfg) -> Path:
    out = Path(cfg.output.get("dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _formats(cfg):
    fmts = cfg.output.get("formats", ["csv"])
    return [fmts] if isinstance(fmts, str) else list(fmts)


def _fmt(mu) -> str:
    mu = complex(mu)
    if mu.imag == 0:
        return f"{mu.real:.15f}"
    return f"{mu.real:.15f} {'+' if mu.imag >= 0 else '-'} {abs(mu.imag):.15f}i"


def _options(cfg):
    method = dict(cfg.method)
    if "M" not in method and cfg.system.get("solution"):
        path = Path(cfg.system["solution"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        if path.exists():
            method["M"] = load_solution(path).degree
    return build_options(method)


def _metadata(cfg, system, opts, mm: MonodromyMatrices | None, extra: dict) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "generator": f"pwfloquet {__version__}",
        "system": {
            "name": system.name,
            "dims": list(system.dims),
            "delays": list(system.delays),
            "omega": system.omega,
            "s": system.s,
            "params": system.params if isinstance(system.params, (dict, list, float, int)) else None,
        },
        "method": opts.metadata(),
        "eig": cfg.eig,
    }
    if mm is not None:
        meta["mesh"] = mm.mesh.metadata()
        meta["layout"] = mm.layout()
        meta["condition_I_minus_U2"] = mm.condition
    meta.update(extra)
    return meta


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return repr(obj)


def dump_matrices(mm: MonodromyMatrices, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name in MATRIX_NAMES:
        scipy.io.mmwrite(str(directory / f"{name}.mtx"), np.asarray(getattr(mm, name)),
                         precision=17, field="complex" if np.iscomplexobj(getattr(mm, name)) else None)


def load_matrices(directory: Path) -> dict:
    """Matrices written by :func:`dump_matrices`, keyed by name.

    ``directory`` may also be the run output directory holding ``matrices/``.
    """
    directory = Path(directory)
    if not (directory / "T.mtx").exists() and (directory / "matrices" / "T.mtx").exists():
        directory = directory / "matrices"
    out = {}
    for name in MATRIX_NAMES:
        path = directory / f"{name}.mtx"
        if not path.exists():
            raise ConfigError(f"matrix file {path} not found")
        try:
            out[name] = np.asarray(scipy.io.mmread(str(path)))
        except ValueError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    return out


# --- commands ----------------------------------------------------------------


def cmd_multipliers(cfg: RunConfig, args) -> int:
    system = build_system(cfg)
    opts = _options(cfg)
    top = args.top or int(cfg.multipliers.get("top", 4))
    t0 = time.perf_counter()
    mm = assemble(system, opts)
    t1 = time.perf_counter()
    ms = multipliers(mm, cfg.eig)
    t2 = time.perf_counter()
    log.info("assembly %.3fs, eigenvalues %.3fs", t1 - t0, t2 - t1)
    for mu in ms.dominant(top):
        print(_fmt(mu))
    out = _outdir(cfg)
    fmts = _formats(cfg)
    if "csv" in fmts:
        (out / "multipliers.csv").write_text(to_csv(ms), encoding="utf-8")
    if "json" in fmts:
        _write_json(out / "metadata.json", _metadata(cfg, system, opts, mm, {
            "command": "multipliers",
            "timings": {"assembly_s": t1 - t0, "eig_s": t2 - t1},
            "dominant": [[float(m.real), float(m.imag)] for m in ms.dominant(top)],
        }))
    if "svg" in fmts:
        from .plotting import plot_multipliers

        plot_multipliers(ms.multipliers, out / "multipliers.svg", title=system.name)
    if args.dump_matrices or cfg.output.get("dump_matrices"):
        dump_matrices(mm, out / "matrices")
    return 0


def cmd_bifurcate(cfg: RunConfig, args) -> int:
    system = build_system(cfg)
    opts = _options(cfg)
    bc = cfg.bifurcate
    name = args.parameter or bc.get("parameter")
    if not name:
        raise ConfigError("bifurcate needs a parameter name")
    start = args.start if args.start is not None else bc.get("start")
    bracket = args.bracket or bc.get("bracket")
    if (start is None) == (bracket is None):
        raise ConfigError("bifurcate needs exactly one of start or bracket")
    kind = args.test or bc.get("test", "nontrivial")
    if kind not in ("nontrivial", "stability"):
        raise ConfigError(f"unknown test {kind!r}")
    tol = args.tol or bc.get("tol", 1e-10)
    test = parameter_sweep(system, nontrivial_test if kind == "nontrivial" else stability_test,
                           name, opts, cfg.eig)
    root = find_bifurcation(test, start=start, bracket=bracket, tol=tol)
    print(repr(root))
    out = _outdir(cfg)
    if "json" in _formats(cfg):
        _write_json(out / "bifurcation.json", _metadata(cfg, system, opts, None, {
            "command": "bifurcate", "parameter": name, "test": kind, "root": root,
            "start": start, "bracket": bracket, "tol": tol,
        }))
    if "csv" in _formats(cfg):
        (out / "bifurcation.csv").write_text(f"parameter,root\n{name},{root!r}\n", encoding="utf-8")
    return 0


def cmd_chart(cfg: RunConfig, args) -> int:
    system = build_system(cfg)
    opts = _options(cfg)
    cc = cfg.chart
    names = args.parameters or cc.get("parameters")
    region = args.region or cc.get("region")
    step = args.step if args.step is not None else cc.get("step")
    level = args.level if args.level is not None else cc.get("level", 1e-3)
    if not names or len(names) != 2:
        raise ConfigError("chart needs two parameter names")
    if not region or len(region) != 4:
        raise ConfigError("chart needs a region a_min a_max b_min b_max")
    if step is None or not step > 0:
        raise ConfigError("chart step must be positive")
    if region[0] >= region[1] or region[2] >= region[3]:
        raise ConfigError("chart region needs min < max on both axes")
    test = parameter_sweep(system, stability_test, names, opts, cfg.eig)
    chart = stability_chart(test, region, step, level)
    out = _outdir(cfg)
    fmts = _formats(cfg)
    npts = sum(len(line) for line in chart.polylines)
    print(f"{len(chart.polylines)} polylines, {npts} points")
    (out / "chart.csv").write_text(chart.to_csv(), encoding="utf-8")
    if "json" in fmts:
        _write_json(out / "chart.json", _metadata(cfg, system, opts, None, {
            "command": "chart", "parameters": list(names), "region": list(region),
            "step": step, "level": level,
        }))
    if "svg" in fmts:
        from .plotting import plot_chart

        plot_chart(chart, out / "chart.svg", labels=names)
    return 0


def _parse_reference(items):
    out = []
    for item in items:
        parts = [float(x) for x in str(item).split(",")] if isinstance(item, str) else item
        if isinstance(parts, (int, float)):
            parts = [parts]
        if len(parts) not in (1, 2):
            raise ConfigError(f"reference {item!r} must be 're' or 're,im'")
        out.append(complex(parts[0], parts[1] if len(parts) == 2 else 0.0))
    return out


def cmd_convergence(cfg: RunConfig, args) -> int:
    system = build_system(cfg)
    opts = _options(cfg)
    cc = cfg.convergence
    degrees = args.degrees or cc.get("degrees")
    if not degrees:
        raise ConfigError("convergence needs a list of degrees")
    ref = args.reference if args.reference is not None else cc.get("reference")
    if ref in (None, "finest"):
        reference = None
    else:
        reference = _parse_reference(ref if isinstance(ref, list) else [ref])
    k = args.k or cc.get("k", 4)
    try:
        table = convergence_study(system, opts, degrees, reference, k=k, eig=cfg.eig)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    text = table.to_csv()
    sys.stdout.write(text)
    out = _outdir(cfg)
    (out / "convergence.csv").write_text(text, encoding="utf-8")
    if "svg" in _formats(cfg):
        from .plotting import plot_convergence

        plot_convergence(table, out / "convergence.svg")
    return 0


def cmd_from_dump(args) -> int:
    m = load_matrices(args.directory)
    mm = MonodromyMatrices(m["T1"], m["T2"], m["U1"], m["U2"], m["T"], dims=None, mesh=None,
                           options=None)
    ms = multipliers(mm, args.eig)
    for mu in ms.dominant(args.top):
        print(_fmt(mu))
    return 0


COMMANDS = {
    "multipliers": cmd_multipliers,
    "bifurcate": cmd_bifurcate,
    "chart": cmd_chart,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "from-dump":
            return cmd_from_dump(args)
        cfg = _merge(args)
        _setup_logging(cfg.verbosity)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FloquetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
