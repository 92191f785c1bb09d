"""Arithmetic formula language for v6 documents.

Supports number literals, named scalars, 1-D arrays `a[i]`, 2-D tables
`t[i,j]`, + - * /, unary minus, parentheses and sin/cos/tan/sqrt/abs.
Trig arguments are in DEGREES (the document angle unit).  Array and table
indices are 1-BASED; tables are indexed [row, col].  All numbers are
double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

from . import model
from .model import (ArrayDef, Box, Composition, GenericDocument, MultiPhi,
                    MultiZ, Param, Polycone, Single, SolidDef, TableDef,
                    VarDef)


class ExprError(Exception):
    pass


class SyntaxErrorAt(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    pass


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Index1:
    name: str
    index: "Expr"


@dataclass(frozen=True)
class Index2:
    name: str
    row: "Expr"
    col: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Lit, Ident, Index1, Index2, Bin, Neg, Call]

FUNCTIONS = {
    "sin": lambda x: math.sin(math.radians(x)),
    "cos": lambda x: math.cos(math.radians(x)),
    "tan": lambda x: math.tan(math.radians(x)),
    "sqrt": math.sqrt,
    "abs": abs,
}


# ---------------------------------------------------------------------------
# parser (recursive descent)

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise SyntaxErrorAt(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() != "":
            self.error("trailing input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() and self.peek() in "+-":
            op = self.text[self.pos]
            self.pos += 1
            e = Bin(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek() and self.peek() in "*/":
            op = self.text[self.pos]
            self.pos += 1
            e = Bin(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        c = self.peek()
        if c == "(":
            self.pos += 1
            e = self.expr()
            self.take(")")
            return e
        if c.isdigit() or c == ".":
            return self.number()
        if c.isalpha() or c == "_":
            return self.name()
        self.error("expected a number, name or '('")

    def number(self) -> Lit:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isdigit() or t[self.pos] == "."):
            self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        try:
            return Lit(float(t[start:self.pos]))
        except ValueError:
            self.pos = start
            self.error("bad number")

    def name(self) -> Expr:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isalnum() or t[self.pos] in "_."):
            self.pos += 1
        ident = t[start:self.pos]
        if self.peek() == "(":
            if ident not in FUNCTIONS:
                self.pos = start
                self.error(f"unknown function {ident!r}")
            self.pos += 1
            arg = self.expr()
            self.take(")")
            return Call(ident, arg)
        if self.peek() == "[":
            self.pos += 1
            first = self.expr()
            if self.peek() == ",":
                self.pos += 1
                second = self.expr()
                self.take("]")
                return Index2(ident, first, second)
            self.take("]")
            return Index1(ident, first)
        return Ident(ident)


def parse_expr(text: str) -> Expr:
    if not text or not text.strip():
        raise SyntaxErrorAt("empty expression", 0)
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Print an AST so that parse_expr(to_text(e)) is structurally equal to e."""
    if isinstance(e, Lit):
        v = e.value
        return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Index1):
        return f"{e.name}[{to_text(e.index)}]"
    if isinstance(e, Index2):
        return f"{e.name}[{to_text(e.row)},{to_text(e.col)}]"
    if isinstance(e, Neg):
        return f"-({to_text(e.arg)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})"
    if isinstance(e, Bin):
        return f"({to_text(e.left)}{e.op}{to_text(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# environment and evaluation

@dataclass
class Environment:
    scalars: dict[str, float] = field(default_factory=dict)
    arrays: dict[str, list[float]] = field(default_factory=dict)
    tables: dict[str, list[list[float]]] = field(default_factory=dict)

    def _check_new(self, name: str):
        if name in self.scalars or name in self.arrays or name in self.tables:
            raise EvalError(f"redefinition of {name!r}")

    def define_scalar(self, name: str, value: float):
        self._check_new(name)
        self.scalars[name] = value

    def define_array(self, name: str, values: list[float]):
        self._check_new(name)
        self.arrays[name] = list(values)

    def define_table(self, name: str, rows: list[list[float]]):
        self._check_new(name)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise EvalError(f"table {name!r} rows have unequal lengths")
        self.tables[name] = [list(r) for r in rows]


def _as_index(v: float, what: str) -> int:
    i = round(v)
    if abs(v - i) > 1e-9:
        raise EvalError(f"{what}: non-integer index {v}")
    return int(i)


def evaluate(e: Expr, env: Environment) -> float:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Ident):
        if e.name not in env.scalars:
            raise EvalError(f"undefined name {e.name!r} (used before definition?)")
        return env.scalars[e.name]
    if isinstance(e, Index1):
        if e.name not in env.arrays:
            raise EvalError(f"undefined array {e.name!r} (used before definition?)")
        arr = env.arrays[e.name]
        i = _as_index(evaluate(e.index, env), e.name)
        if not 1 <= i <= len(arr):
            raise EvalError(f"{e.name}[{i}]: index out of bounds (1..{len(arr)})")
        return arr[i - 1]
    if isinstance(e, Index2):
        if e.name not in env.tables:
            raise EvalError(f"undefined table {e.name!r} (used before definition?)")
        tab = env.tables[e.name]
        i = _as_index(evaluate(e.row, env), e.name)
        j = _as_index(evaluate(e.col, env), e.name)
        if not 1 <= i <= len(tab):
            raise EvalError(f"{e.name}[{i},{j}]: row out of bounds (1..{len(tab)})")
        if not 1 <= j <= len(tab[0]):
            raise EvalError(f"{e.name}[{i},{j}]: column out of bounds (1..{len(tab[0])})")
        return tab[i - 1][j - 1]
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, Call):
        return FUNCTIONS[e.fn](evaluate(e.arg, env))
    if isinstance(e, Bin):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise EvalError("division by zero")
            return a / b
        raise EvalError(f"unknown operator {e.op!r}")
    raise TypeError(f"not an expression: {e!r}")


def eval_text(text: str, env: Environment) -> float:
    return evaluate(parse_expr(text), env)


# ---------------------------------------------------------------------------
# document expansion

def _resolve(v: Param, env: Environment, where: str) -> float:
    if isinstance(v, str):
        try:
            return eval_text(v, env)
        except ExprError as exc:
            raise EvalError(f"{where}: {exc}") from exc
    return float(v)


def build_environment(doc: GenericDocument) -> Environment:
    """Process var/array/table definitions in document order."""
    env = Environment()
    for d in doc.definitions:
        if isinstance(d, VarDef):
            if d.connection is not None:
                raise EvalError(
                    f"var {d.name!r} has an unresolved connection {d.connection!r} "
                    "(run parameter filling first)")
            env.define_scalar(d.name, _resolve(d.value, env, f"var {d.name!r}"))
        elif isinstance(d, ArrayDef):
            env.define_array(d.name, [_resolve(v, env, f"array {d.name!r}") for v in d.values])
        elif isinstance(d, TableDef):
            env.define_table(d.name, [
                [_resolve(v, env, f"table {d.name!r}") for v in row] for row in d.rows])
    return env


def expand_document(doc: GenericDocument) -> GenericDocument:
    """Replace every expression-valued attribute with its numeric value.

    Definitions are evaluated in document order; the output document
    contains no identifiers and re-expanding it is the identity.
    """
    env = build_environment(doc)

    def num(v: Param, where: str) -> float:
        return _resolve(v, env, where)

    solids = {}
    for s in doc.solids.values():
        solids[s.name] = SolidDef(s.name, _expand_shape(s.shape, env, s.name), s.material)

    comps = {}
    for c in doc.compositions.values():
        placements = []
        for p in c.placements:
            w = f"composition {c.name!r}"
            if isinstance(p, Single):
                placements.append(Single(
                    p.volume,
                    tuple(num(v, w) for v in p.translation),
                    tuple(num(v, w) for v in p.rotation)))
            elif isinstance(p, MultiPhi):
                placements.append(MultiPhi(p.volume, num(p.ncopy, w), num(p.phi0, w),
                                           num(p.dphi, w), num(p.radius, w)))
            elif isinstance(p, MultiZ):
                placements.append(MultiZ(p.volume, num(p.ncopy, w), num(p.z0, w), num(p.dz, w)))
        comps[c.name] = Composition(c.name, placements)

    definitions: list[model.Definition] = []
    for d in doc.definitions:
        if isinstance(d, VarDef):
            definitions.append(VarDef(d.name, env.scalars[d.name]))
        elif isinstance(d, ArrayDef):
            definitions.append(ArrayDef(d.name, list(env.arrays[d.name])))
        elif isinstance(d, TableDef):
            definitions.append(TableDef(d.name, [list(r) for r in env.tables[d.name]]))

    return replace(doc, solids=solids, compositions=comps, definitions=definitions)


def _expand_shape(shape: model.Shape, env: Environment, name: str) -> model.Shape:
    where = f"solid {name!r}"

    def num(v: Param) -> float:
        return _resolve(v, env, where)

    if isinstance(shape, Polycone):
        return Polycone(num(shape.phi0), num(shape.dphi),
                        [(num(z), num(rmin), num(rmax)) for z, rmin, rmax in shape.zplanes])
    cls = type(shape)
    fields = [(f, getattr(shape, f)) for f in cls.__dataclass_fields__]
    return cls(**{f: num(v) for f, v in fields})
