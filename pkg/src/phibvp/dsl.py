"""Problem definition files and the arithmetic expression language inside them.

Grammar (``^`` is power and right-associative; unary minus binds looser than ``^``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"

Expressions evaluate with numpy, so variables may be bound to arrays.
"""
from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import PhiBVPError, ValidationError
from .homeomorphism import Homeomorphism
from .operators import ProblemSpec
from .solver import SolverConfig


class DSLError(PhiBVPError, ValueError):
    pass


class ExpressionSyntaxError(DSLError):
    def __init__(self, message, line, column, expected=()):
        self.line, self.column, self.expected = line, column, tuple(expected)
        exp = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{column}: {message}{exp}")


class UnknownIdentifier(DSLError):
    def __init__(self, name, line=None, column=None):
        self.name = name
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}unknown identifier {name!r}")


class ArityError(DSLError):
    pass


class UnboundVariable(DSLError):
    pass


FUNCTIONS = {
    "exp": (1, np.exp),
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tanh": (1, np.tanh),
    "abs": (1, np.abs),
    "sign": (1, np.sign),
    "ln": (1, np.log),
    "sqrt": (1, np.sqrt),
    "pow": (2, np.power),
}
CONSTANTS = {"pi": math.pi}


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(source: str):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            out.append((kind, text, line, col))
        for ch in text:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()
    out.append(("end", "", line, col))
    return out


class _Parser:
    def __init__(self, source: str, allowed_vars):
        self.toks = _tokenize(source)
        self.i = 0
        self.allowed = frozenset(allowed_vars)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.take()
        if tok[1] != text or tok[0] == "end":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExpressionSyntaxError(f"unexpected {found}", tok[2], tok[3], [repr(text)])
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"unexpected {tok[1]!r}", tok[2], tok[3],
                                        ["operator", "end of input"])
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
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, text, line, col = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise UnknownIdentifier(text, line, col)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[text][0]
                if len(args) != arity:
                    raise ArityError(f"{line}:{col}: {text}() takes {arity} argument(s), got {len(args)}")
                return Call(text, tuple(args))
            if text in self.allowed:
                return Var(text)
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            if text in FUNCTIONS:
                raise ExpressionSyntaxError(f"function {text!r} used without arguments", line, col, ["'('"])
            raise UnknownIdentifier(text, line, col)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(f"unexpected {found}", line, col, ["number", "identifier", "'('", "'-'"])


def parse_expression(source: str, allowed_vars=("t", "x", "y")) -> "Expression":
    """Parse ``source`` into an :class:`Expression` over ``allowed_vars``."""
    return Expression(_Parser(source, allowed_vars).parse(), source, tuple(allowed_vars))


def _evaluate(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariable(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Neg):
        return -_evaluate(node.operand, env)
    if isinstance(node, BinOp):
        a = _evaluate(node.left, env)
        b = _evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return np.divide(a, b)
        return np.power(np.asarray(a, dtype=float), b)
    if isinstance(node, Call):
        return FUNCTIONS[node.name][1](*(_evaluate(a, env) for a in node.args))
    raise TypeError(f"not an expression node: {node!r}")


def eval_expression(expr: "Expression", env: dict):
    """Evaluate with IEEE semantics; NaN and infinity are returned, not raised."""
    node = expr.ast if isinstance(expr, Expression) else expr
    with np.errstate(all="ignore"):
        out = _evaluate(node, env)
    return float(out) if np.ndim(out) == 0 else out


def to_source(node) -> str:
    """Fully parenthesised source text; parsing it gives back the same AST."""
    if isinstance(node, Expression):
        node = node.ast
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.name}({', '.join(to_source(a) for a in node.args)})"


@dataclass(frozen=True)
class Expression:
    """A parsed expression; calling it binds positional arguments to ``variables``."""

    ast: object
    source: str
    variables: tuple

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments {self.variables}, got {len(args)}")
        return eval_expression(self, dict(zip(self.variables, args)))

    def __str__(self):
        return self.source


# --- problem files -----------------------------------------------------------

_SECTIONS = {
    "problem": {"T", "b", "name"},
    "phi": {"kind", "p", "a", "expr", "inverse", "odd"},
    "f": {"expr"},
    "h": {"expr"},
    "c": {"expr"},
    "hypotheses": {"M1", "M2", "rho"},
    "solver": {f.name for f in fields(SolverConfig)},
}


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _number(sec, key, raw, integer=False):
    try:
        v = float(_unquote(raw))
    except ValueError:
        raise ValidationError(f"{sec}.{key}", f"not a number: {raw!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{sec}.{key}", "must be finite")
    if integer:
        if v != int(v):
            raise ValidationError(f"{sec}.{key}", f"not an integer: {raw!r}")
        return int(v)
    return v


def _expression(sec, raw, allowed):
    src = _unquote(raw)
    try:
        return parse_expression(src, allowed)
    except UnknownIdentifier:
        raise
    except DSLError as exc:
        raise ValidationError(f"{sec}.expr", str(exc)) from exc


def _build_phi(sec: dict) -> Homeomorphism:
    kind = _unquote(sec.get("kind", "")).strip()
    if not kind:
        raise ValidationError("phi.kind", "missing")
    try:
        if kind == "identity":
            return Homeomorphism.identity()
        if kind == "p_laplacian":
            if "p" not in sec:
                raise ValidationError("phi.p", "missing")
            return Homeomorphism.p_laplacian(_number("phi", "p", sec["p"]))
        if kind in ("bounded_tanh", "bounded_rational"):
            a = _number("phi", "a", sec["a"]) if "a" in sec else 1.0
            return getattr(Homeomorphism, kind)(a)
        if kind == "custom":
            if "expr" not in sec:
                raise ValidationError("phi.expr", "custom phi needs expr (in s)")
            fwd = parse_expression(_unquote(sec["expr"]), ("s",))
            inv = parse_expression(_unquote(sec["inverse"]), ("z",)) if "inverse" in sec else None
            odd = _unquote(sec.get("odd", "false")).lower() in ("1", "true", "yes")
            phi = Homeomorphism.custom(lambda s: np.asarray(fwd(s), dtype=float) + 0.0 * np.asarray(s),
                                       None if inv is None else (lambda z: np.asarray(inv(z), dtype=float)),
                                       odd=odd)
            phi.validate()
            return phi
    except ValidationError:
        raise
    except (DSLError, ValueError) as exc:
        raise ValidationError("phi", str(exc)) from exc
    raise ValidationError("phi.kind", f"unknown kind {kind!r}")


def load_problem(source: Union[str, os.PathLike]) -> tuple[ProblemSpec, SolverConfig]:
    """Read a problem file (path or text) into a validated spec and solver config.

    Raises:
        ValidationError: missing or malformed fields, named by ``section.key``.
        UnknownIdentifier: an expression uses a variable outside its scope.
    """
    if isinstance(source, os.PathLike) or ("\n" not in source and "[" not in source):
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        default_name = path.stem
    else:
        text, default_name = source, "problem"
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError("file", str(exc).splitlines()[0]) from exc
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ValidationError(name, "unknown section")
        for key in cp[name]:
            if key not in _SECTIONS[name]:
                raise ValidationError(f"{name}.{key}", "unknown key")
    for name in ("problem", "phi", "f"):
        if not cp.has_section(name):
            raise ValidationError(name, "missing section")
    prob = cp["problem"]
    for key in ("T", "b"):
        if key not in prob:
            raise ValidationError(f"problem.{key}", "missing")
    if "expr" not in cp["f"]:
        raise ValidationError("f.expr", "missing")

    T = _number("problem", "T", prob["T"])
    b = _number("problem", "b", prob["b"])
    phi = _build_phi(dict(cp["phi"]))
    f = _expression("f", cp["f"]["expr"], ("t", "x", "y"))
    h = _expression("h", cp["h"]["expr"], ("t",)) if cp.has_section("h") and "expr" in cp["h"] else None
    c = _expression("c", cp["c"]["expr"], ("t",)) if cp.has_section("c") and "expr" in cp["c"] else None
    hyp = dict(cp["hypotheses"]) if cp.has_section("hypotheses") else {}
    M1 = _number("hypotheses", "M1", hyp["M1"]) if "M1" in hyp else None
    M2 = _number("hypotheses", "M2", hyp["M2"]) if "M2" in hyp else None
    rho = _number("hypotheses", "rho", hyp["rho"]) if "rho" in hyp else None
    spec = ProblemSpec(phi=phi, b=b, T=T, f=f, h=h, c=c, M1=M1, M2=M2, rho=rho,
                       name=_unquote(prob.get("name", default_name)))

    overrides = {}
    types = {fl.name: fl.type for fl in fields(SolverConfig)}
    for key, raw in (cp["solver"].items() if cp.has_section("solver") else ()):
        kind = types[key]
        if kind in ("str", str):
            overrides[key] = _unquote(raw)
        else:
            overrides[key] = _number("solver", key, raw, integer=kind in ("int", int))
    try:
        config = SolverConfig(**overrides)
    except ValueError as exc:
        raise ValidationError("solver", str(exc)) from exc
    return spec, config


def shipped_problem(name: str) -> Path:
    """Path of a problem file bundled with the package, e.g. ``"example5_1"``."""
    ref = resources.files("phibvp") / "data" / f"{name}.prob"
    if not ref.is_file():
        raise FileNotFoundError(f"no shipped problem named {name!r}")
    return Path(str(ref))
