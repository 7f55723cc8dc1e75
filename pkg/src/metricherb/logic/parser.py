"""Text syntax for terms and formulas.

Grammar (whitespace-insensitive)::

    term    := NAME [ '[' scalar (',' scalar)* ']' ] '(' term (',' term)* ')'
             | NAME | '0'
    formula := ('sup' | 'inf') NAME [':' SORT] '.' formula
             | 'd' '(' term ',' term ')'
             | PRED '(' term (',' term)* ')'
             | 'neg' '(' formula ')'
             | ('sub' '(' formula ',' q ')') | ('scale' | 'addc') '(' q ',' formula ')'
             | ('min' | 'max') '(' formula (',' formula)+ ')'
             | ('absdiff' | 'csum') '(' formula ',' formula ')'
             | q

``q`` is a rational written as a decimal or ``p/q``; scalars in brackets
may also be Gaussian rationals like ``0.5-0.5i``. A bare name is a constant
when the signature declares it, otherwise a variable.
"""
from __future__ import annotations

import re
from fractions import Fraction

from ..scalars import format_scalar, parse_scalar
from .syntax import (
    App,
    BINARY_OPS,
    BlackBox,
    Conn,
    Const,
    Dist,
    LogicError,
    Num,
    ParseError,
    Pred,
    Quant,
    Signature,
    SortError,
    UnknownSymbolError,
    Var,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:/\d+)?")
_KEYWORDS = {"sup", "inf", "d"}


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.pos = 0
        self.free: dict[str, Var] = {}

    # -- lexing helpers
    def error(self, msg, pos=None):
        return ParseError(msg, self.pos if pos is None else pos, self.text)

    def ws(self):
        n = len(self.text)
        while self.pos < n and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            got = self.peek() or "end of input"
            raise self.error(f"expected {ch!r}, found {got!r}")
        self.pos += 1

    def accept(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        self.ws()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error("expected a name")
        self.pos = m.end()
        return m.group()

    def number(self) -> Fraction:
        self.ws()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise self.error("expected a number")
        self.pos = m.end()
        return Fraction(m.group())

    def at_number(self) -> bool:
        self.ws()
        return bool(_NUMBER.match(self.text, self.pos))

    def bracket_params(self) -> tuple:
        start = self.pos
        self.expect("[")
        end = self.text.find("]", self.pos)
        if end < 0:
            raise self.error("unclosed '['", start)
        raw = self.text[self.pos:end]
        self.pos = end + 1
        try:
            return tuple(parse_scalar(p) for p in raw.split(","))
        except ValueError as e:
            raise self.error(f"bad parameter list [{raw}]: {e}", start) from None

    def done(self):
        if self.peek():
            raise self.error(f"unexpected trailing text {self.text[self.pos:]!r}")

    # -- terms
    def var(self, name: str, sort, scope: dict, pos: int) -> Var:
        v = scope.get(name) or self.free.get(name)
        if v is None:
            v = Var(name, sort or self.sig.default_sort)
            self.free[name] = v
        if sort is not None and v.sort != sort:
            raise SortError(f"variable {name} has sort {v.sort.name}, used where {sort.name} is expected (position {pos})")
        return v

    def term(self, sort, scope: dict):
        self.ws()
        pos = self.pos
        if self.text.startswith("0", pos) and not _NUMBER.match(self.text, pos).group().lstrip("0"):
            self.pos += 1
            try:
                c = self.sig.constant("0")
            except UnknownSymbolError:
                raise self.error("this signature has no constant 0", pos) from None
            return self._check_sort(Const(c), sort, pos)
        name = self.ident()
        params = self.bracket_params() if self.peek() == "[" else ()
        if self.peek() == "(" or params:
            try:
                fn = self.sig.function(name, params)
            except UnknownSymbolError as e:
                raise UnknownSymbolError(f"{e} (position {pos})") from None
            except LogicError as e:
                raise ParseError(str(e), pos, self.text) from None
            self.expect("(")
            args = []
            for i, s in enumerate(fn.arg_sorts):
                if i:
                    self.expect(",")
                args.append(self.term(s, scope))
            self.expect(")")
            return self._check_sort(App(fn, tuple(args)), sort, pos)
        if name in self.sig.constants and name not in scope:
            return self._check_sort(Const(self.sig.constants[name]), sort, pos)
        if name in self.sig.functions or name in self.sig.predicates:
            raise self.error(f"symbol {name!r} used without arguments", pos)
        return self.var(name, sort, scope, pos)

    def _check_sort(self, t, sort, pos):
        if sort is not None and t.out_sort != sort:
            raise SortError(f"term of sort {t.out_sort.name} where {sort.name} is expected (position {pos})")
        return t

    # -- formulas
    def formula(self, scope: dict):
        self.ws()
        pos = self.pos
        if self.at_number():
            return Num(self.number())
        name = self.ident()
        if name in ("sup", "inf"):
            var_name = self.ident()
            sort = self.sig.default_sort
            if self.accept(":"):
                sort = self.sig.sort(self.ident())
            self.expect(".")
            v = Var(var_name, sort)
            return Quant(name, v, self.formula({**scope, var_name: v}))
        if name == "d":
            self.expect("(")
            left = self.term(None, scope)
            self.expect(",")
            right = self.term(left.out_sort, scope)
            self.expect(")")
            return Dist(left, right)
        if name == "neg":
            self.expect("(")
            a = self.formula(scope)
            self.expect(")")
            return Conn("neg", (a,))
        if name == "sub":
            self.expect("(")
            a = self.formula(scope)
            self.expect(",")
            r = self.number()
            self.expect(")")
            return Conn("sub", (a,), r)
        if name in ("scale", "addc"):
            self.expect("(")
            q = self.number()
            self.expect(",")
            a = self.formula(scope)
            self.expect(")")
            return Conn(name, (a,), q)
        if name in BINARY_OPS:
            self.expect("(")
            parts = [self.formula(scope)]
            while self.accept(","):
                parts.append(self.formula(scope))
            self.expect(")")
            if len(parts) < 2 or (len(parts) > 2 and name not in ("min", "max")):
                raise self.error(f"{name} takes two arguments", pos)
            acc = parts[0]
            for p in parts[1:]:
                acc = Conn(name, (acc, p))
            return acc
        if name in self.sig.predicates:
            sym = self.sig.predicates[name]
            self.expect("(")
            args = []
            for i, s in enumerate(sym.arg_sorts):
                if i:
                    self.expect(",")
                args.append(self.term(s, scope))
            self.expect(")")
            return Pred(sym, tuple(args))
        if name in self.sig.functions:
            raise self.error(f"{name!r} is a function symbol, a formula was expected", pos)
        raise UnknownSymbolError(f"unknown predicate or connective {name!r} (position {pos})")


def parse_term(text: str, sig: Signature):
    p = _Parser(text, sig)
    t = p.term(None, {})
    p.done()
    return t


def parse_formula(text: str, sig: Signature):
    p = _Parser(text, sig)
    phi = p.formula({})
    p.done()
    return phi


# --------------------------------------------------------------------------
# printing


def format_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    params = ""
    if t.fn.params:
        params = "[" + ",".join(format_scalar(p) for p in t.fn.params) + "]"
    return f"{t.fn.name}{params}(" + ", ".join(format_term(a) for a in t.args) + ")"


def format_formula(phi, sig: Signature | None = None) -> str:
    default = sig.default_sort if sig is not None else None
    return _fmt(phi, default)


def _fmt(phi, default) -> str:
    if isinstance(phi, Dist):
        return f"d({format_term(phi.left)}, {format_term(phi.right)})"
    if isinstance(phi, Pred):
        return f"{phi.symbol.name}(" + ", ".join(format_term(a) for a in phi.args) + ")"
    if isinstance(phi, Num):
        return format_scalar(phi.value)
    if isinstance(phi, Quant):
        ann = f":{phi.var.sort.name}" if default is not None and phi.var.sort != default else ""
        return f"{phi.kind} {phi.var.name}{ann} . {_fmt(phi.body, default)}"
    if isinstance(phi, Conn):
        args = [_fmt(a, default) for a in phi.args]
        if phi.op == "sub":
            return f"sub({args[0]}, {format_scalar(phi.param)})"
        if phi.op in ("scale", "addc"):
            return f"{phi.op}({format_scalar(phi.param)}, {args[0]})"
        return f"{phi.op}(" + ", ".join(args) + ")"
    if isinstance(phi, BlackBox):
        return f"<{phi.name}>"
    raise TypeError(f"not a formula: {phi!r}")
