"""Tiny arithmetic language for coefficients in configuration files.

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | NAME | 'par' '.' NAME | 'par' '[' INTEGER ']'
             | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-theta^2`` is ``-(theta^2)``.
Names are ``t``, ``theta``, ``pi`` and ``e``; functions are ``sin cos tan
exp log sqrt abs min max`` and ``sol(i, time)``, which evaluates component
``i`` (1-based) of the bound periodic solution.  ``par[i]`` is 1-based too.
Arithmetic follows IEEE rules: division by zero yields inf or nan instead of
raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np

from .errors import ExprBindError, ExprSyntaxError

__all__ = [
    "Num", "Var", "Param", "Neg", "BinOp", "Call",
    "parse", "evaluate", "to_source", "compile_expr", "free_names",
]

FUNCTIONS: dict[str, tuple[int, int]] = {
    "sin": (1, 1), "cos": (1, 1), "tan": (1, 1), "exp": (1, 1), "log": (1, 1),
    "sqrt": (1, 1), "abs": (1, 1), "min": (2, 99), "max": (2, 99), "sol": (2, 2),
}
CONSTANTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("t", "theta")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    key: str | int


@dataclass(frozen=True)
class Neg:
    operand: Any


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Any
    right: Any


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^().,\[\]]))"
)


def _tokenize(src: str):
    pos, out = 0, []
    while True:
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            rest = src[pos:]
            if rest.strip() == "":
                out.append(("end", None, len(src)))
                return out
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()


class _Parser:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.take()
        if val != text:
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if val == "par":
                k2, v2, p2 = self.take()
                if v2 == ".":
                    k3, v3, p3 = self.take()
                    if k3 != "name":
                        raise ExprSyntaxError("expected parameter name after 'par.'", p3)
                    return Param(v3)
                if v2 == "[":
                    k3, v3, p3 = self.take()
                    if k3 != "num" or not v3.isdigit() or int(v3) < 1:
                        raise ExprSyntaxError("expected positive integer index in par[...]", p3)
                    self.expect("]")
                    return Param(int(v3))
                raise ExprSyntaxError("expected '.' or '[' after 'par'", p2)
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", pos)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                lo, hi = FUNCTIONS[val]
                if not lo <= len(args) <= hi:
                    raise ExprSyntaxError(f"{val} takes {lo}{'' if lo == hi else '+'} arguments", pos)
                return Call(val, tuple(args))
            if val in FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} needs arguments", pos)
            if val in VARIABLES or val in CONSTANTS:
                return Var(val)
            raise ExprSyntaxError(f"unknown name {val!r}", pos)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {val!r}", pos)


def parse(source: str):
    """Parse ``source`` into an immutable AST."""
    return _Parser(source).parse()


def to_source(node) -> str:
    """Canonical, fully parenthesized text form; ``parse(to_source(n)) == n``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Param):
        return f"par[{node.key}]" if isinstance(node.key, int) else f"par.{node.key}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_names(node) -> set:
    """Variables, parameters and solution use referenced by ``node``."""
    if isinstance(node, Var):
        return {node.name} if node.name in VARIABLES else set()
    if isinstance(node, Param):
        return {("par", node.key)}
    if isinstance(node, Neg):
        return free_names(node.operand)
    if isinstance(node, BinOp):
        return free_names(node.left) | free_names(node.right)
    if isinstance(node, Call):
        out = {"sol"} if node.name == "sol" else set()
        for a in node.args:
            out |= free_names(a)
        return out
    return set()


_UNARY = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
          "sqrt": np.sqrt, "abs": np.abs}
_BINARY = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}


def _lookup(params, key):
    try:
        if isinstance(key, int):
            if isinstance(params, Mapping):
                raise ExprBindError(f"par[{key}] needs sequence parameters")
            return float(params[key - 1])
        if isinstance(params, Mapping):
            return float(params[key])
        return float(getattr(params, key))
    except (KeyError, IndexError, AttributeError, TypeError):
        raise ExprBindError(f"parameter {key!r} is not bound") from None


def compile_expr(node) -> Callable[[float, float, Any, Any], float]:
    """Compile an AST to ``f(t, theta, params, sol) -> float``."""
    if isinstance(node, Num):
        v = np.float64(node.value)
        return lambda t, th, p, s: v
    if isinstance(node, Var):
        if node.name == "t":
            return lambda t, th, p, s: np.float64(t)
        if node.name == "theta":
            return lambda t, th, p, s: np.float64(th)
        c = np.float64(CONSTANTS[node.name])
        return lambda t, th, p, s: c
    if isinstance(node, Param):
        key = node.key
        return lambda t, th, p, s: np.float64(_lookup(p, key))
    if isinstance(node, Neg):
        f = compile_expr(node.operand)
        return lambda t, th, p, s: -f(t, th, p, s)
    if isinstance(node, BinOp):
        op, fl, fr = _BINARY[node.op], compile_expr(node.left), compile_expr(node.right)
        return lambda t, th, p, s: op(fl(t, th, p, s), fr(t, th, p, s))
    if isinstance(node, Call):
        fs = [compile_expr(a) for a in node.args]
        if node.name in _UNARY:
            fn, f0 = _UNARY[node.name], fs[0]
            return lambda t, th, p, s: fn(f0(t, th, p, s))
        if node.name in ("min", "max"):
            red = np.minimum if node.name == "min" else np.maximum

            def call(t, th, p, s):
                out = fs[0](t, th, p, s)
                for f in fs[1:]:
                    out = red(out, f(t, th, p, s))
                return out

            return call
        fi, fe = fs

        def sol_call(t, th, p, s):
            if s is None:
                raise ExprBindError("sol(...) used but no solution fixture is bound")
            i = fi(t, th, p, s)
            if i != int(i):
                raise ExprBindError("sol component index must be an integer")
            return np.float64(s(int(i), float(fe(t, th, p, s))))

        return sol_call
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, t: float = 0.0, theta: float = 0.0, params: Any = None, sol=None) -> float:
    """Evaluate an AST (or source string) with IEEE semantics."""
    if isinstance(node, str):
        node = parse(node)
    with np.errstate(all="ignore"):
        return float(compile_expr(node)(t, theta, params, sol))
