"""Signatures, terms and formulas of continuous first-order logic.

Everything here is immutable. Terms and formulas are frozen dataclasses, so
structural equality and hashing come for free; the parser round-trip test
relies on that.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence, Union

from ..scalars import Scalar, scalar


class LogicError(Exception):
    pass


class ParseError(LogicError):
    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        where = "" if pos is None else f" at position {pos}"
        super().__init__(f"{message}{where}")


class UnknownSymbolError(LogicError):
    pass


class SortError(LogicError):
    pass


class SignatureError(LogicError):
    pass


# --------------------------------------------------------------------------
# intervals, enclosures, moduli


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def of(cls, lo, hi) -> "Interval":
        return cls(_exact(lo), _exact(hi))

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return float(self.lo) - tol <= x <= float(self.hi) + tol

    @property
    def width(self):
        return self.hi - self.lo

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def _exact(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return scalar(x)


EXACT, CERTIFIED, SAMPLED = "exact", "certified", "sampled"
_MODE_RANK = {EXACT: 0, CERTIFIED: 1, SAMPLED: 2}


def worst_mode(*modes: str) -> str:
    return max(modes, key=_MODE_RANK.__getitem__) if modes else EXACT


@dataclass(frozen=True)
class Enclosure:
    """Bounds on a semantic value.

    In exact and certified mode the true value lies in ``[lo, hi]``. In
    sampled mode the bounds come from a finite search: for ``inf`` the upper
    bound is still witnessed (a real point attains it) but nothing else is
    guaranteed.
    """

    lo: float
    hi: float
    mode: str = EXACT

    def __post_init__(self):
        if self.mode not in _MODE_RANK:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lo > self.hi:
            raise ValueError(f"inverted enclosure [{self.lo}, {self.hi}]")

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def intersects(self, other: "Enclosure", tol: float = 0.0) -> bool:
        return self.lo <= other.hi + tol and other.lo <= self.hi + tol

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "mode": self.mode}


@dataclass(frozen=True)
class Modulus:
    """Per-variable Lipschitz constants; the uniform-continuity modulus is eps/L."""

    constants: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, var: str) -> float:
        return self.constants.get(var, 0.0)

    def delta(self, eps: float, var: str) -> float:
        L = self[var]
        return float("inf") if L == 0 else eps / L

    def bound(self, distances: Mapping[str, float]) -> float:
        return sum(self[v] * d for v, d in distances.items())


# --------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Sort:
    name: str
    bound: Fraction  # metric bound N

    def __post_init__(self):
        if self.bound <= 0:
            raise SignatureError(f"sort {self.name}: metric bound must be positive")


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    params: tuple = ()
    arg_sorts: tuple[Sort, ...] = ()
    out_sort: Sort | None = None
    lipschitz: tuple[float, ...] = field(default=(), compare=False)
    kind: str = field(default="table", compare=False)

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class PredicateSymbol:
    name: str
    arg_sorts: tuple[Sort, ...]
    interval: Interval
    lipschitz: tuple[float, ...] = field(default=(), compare=False)
    kind: str = field(default="table", compare=False)

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class ConstantSymbol:
    name: str
    sort: Sort


@dataclass(frozen=True)
class FunctionFamily:
    """A function symbol, possibly indexed by exact scalar parameters.

    ``make`` validates parameters and returns the concrete symbol.
    """

    name: str
    nparams: int
    make: Callable[[tuple], FunctionSymbol] = field(compare=False)

    def instantiate(self, params: Sequence) -> FunctionSymbol:
        params = tuple(scalar(p) for p in params)
        if len(params) != self.nparams:
            raise SignatureError(f"{self.name} takes {self.nparams} parameters, got {len(params)}")
        return self.make(params)


def simple_family(name: str, arg_sorts, out_sort: Sort, lipschitz=None, kind: str = "table") -> FunctionFamily:
    arg_sorts = tuple(arg_sorts)
    lip = tuple(lipschitz) if lipschitz is not None else (1.0,) * len(arg_sorts)
    sym = FunctionSymbol(name, (), arg_sorts, out_sort, lip, kind)
    return FunctionFamily(name, 0, lambda _p: sym)


class Signature:
    """Sorts plus function, predicate and constant symbols.

    Treated as immutable: :meth:`extend` returns a new signature.
    """

    def __init__(
        self,
        sorts: Sequence[Sort],
        functions: Mapping[str, FunctionFamily] = (),
        predicates: Mapping[str, PredicateSymbol] = (),
        constants: Mapping[str, ConstantSymbol] = (),
        default_sort: Sort | None = None,
        notes: Mapping[str, str] = (),
    ):
        self.sorts = {s.name: s for s in sorts}
        if not self.sorts:
            raise SignatureError("a signature needs at least one sort")
        self.functions = dict(functions)
        self.predicates = dict(predicates)
        self.constants = dict(constants)
        self.default_sort = default_sort or next(iter(self.sorts.values()))
        self.notes = dict(notes)
        for p in self.predicates.values():
            if any(L < 0 for L in p.lipschitz):
                raise SignatureError(f"negative Lipschitz constant on {p.name}")
        clash = set(self.functions) & set(self.predicates)
        if clash:
            raise SignatureError(f"names used as both function and predicate: {sorted(clash)}")

    def sort(self, name: str) -> Sort:
        try:
            return self.sorts[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown sort {name!r}") from None

    def function(self, name: str, params: Sequence = ()) -> FunctionSymbol:
        fam = self.functions.get(name)
        if fam is None:
            raise UnknownSymbolError(f"unknown function symbol {name!r}")
        return fam.instantiate(params)

    def predicate(self, name: str) -> PredicateSymbol:
        try:
            return self.predicates[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown predicate symbol {name!r}") from None

    def constant(self, name: str) -> ConstantSymbol:
        try:
            return self.constants[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown constant {name!r}") from None

    def extend(self, sorts=(), functions=(), predicates=(), constants=(), notes=()) -> "Signature":
        return Signature(
            list(self.sorts.values()) + list(sorts),
            {**self.functions, **dict(functions)},
            {**self.predicates, **dict(predicates)},
            {**self.constants, **dict(constants)},
            self.default_sort,
            {**self.notes, **dict(notes)},
        )

    def __repr__(self):
        return (
            f"Signature(sorts={list(self.sorts)}, functions={list(self.functions)}, "
            f"predicates={list(self.predicates)}, constants={list(self.constants)})"
        )


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort

    @property
    def out_sort(self) -> Sort:
        return self.sort


@dataclass(frozen=True)
class Const:
    symbol: ConstantSymbol

    @property
    def name(self) -> str:
        return self.symbol.name

    @property
    def out_sort(self) -> Sort:
        return self.symbol.sort


@dataclass(frozen=True)
class App:
    fn: FunctionSymbol
    args: tuple

    def __post_init__(self):
        if len(self.args) != self.fn.arity:
            raise SortError(f"{self.fn.name} expects {self.fn.arity} arguments, got {len(self.args)}")
        for a, s in zip(self.args, self.fn.arg_sorts):
            if a.out_sort != s:
                raise SortError(f"{self.fn.name}: argument of sort {a.out_sort.name}, expected {s.name}")

    @property
    def out_sort(self) -> Sort:
        return self.fn.out_sort


Term = Union[Var, Const, App]


def term_vars(t: Term) -> tuple[Var, ...]:
    seen: dict[Var, None] = {}
    _collect_term_vars(t, seen)
    return tuple(seen)


def _collect_term_vars(t, seen):
    if isinstance(t, Var):
        seen.setdefault(t, None)
    elif isinstance(t, App):
        for a in t.args:
            _collect_term_vars(a, seen)


def term_depth(t: Term) -> int:
    if isinstance(t, App):
        return 1 + max((term_depth(a) for a in t.args), default=0)
    return 0


def term_size(t: Term) -> int:
    if isinstance(t, App):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def substitute_term(t: Term, mapping: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t, t)
    if isinstance(t, App):
        return App(t.fn, tuple(substitute_term(a, mapping) for a in t.args))
    return t


# --------------------------------------------------------------------------
# formulas

UNARY_OPS = ("neg",)
PARAM_UNARY_OPS = ("sub", "scale", "addc")
BINARY_OPS = ("min", "max", "absdiff", "csum")
CONNECTIVES = UNARY_OPS + PARAM_UNARY_OPS + BINARY_OPS


@dataclass(frozen=True)
class Dist:
    left: Term
    right: Term

    def __post_init__(self):
        if self.left.out_sort != self.right.out_sort:
            raise SortError(f"d() between sorts {self.left.out_sort.name} and {self.right.out_sort.name}")


@dataclass(frozen=True)
class Pred:
    symbol: PredicateSymbol
    args: tuple

    def __post_init__(self):
        if len(self.args) != self.symbol.arity:
            raise SortError(f"{self.symbol.name} expects {self.symbol.arity} arguments")
        for a, s in zip(self.args, self.symbol.arg_sorts):
            if a.out_sort != s:
                raise SortError(f"{self.symbol.name}: argument of sort {a.out_sort.name}, expected {s.name}")


@dataclass(frozen=True)
class Conn:
    op: str
    args: tuple
    param: Fraction | None = None

    def __post_init__(self):
        if self.op not in CONNECTIVES:
            raise LogicError(f"{self.op!r} is not in the connective basis")
        want = 2 if self.op in BINARY_OPS else 1
        if len(self.args) != want:
            raise LogicError(f"{self.op} takes {want} formula argument(s)")
        if (self.op in PARAM_UNARY_OPS) != (self.param is not None):
            raise LogicError(f"{self.op}: parameter {'missing' if self.param is None else 'unexpected'}")
        if self.param is not None and not isinstance(self.param, Fraction):
            object.__setattr__(self, "param", Fraction(scalar(self.param)))


@dataclass(frozen=True)
class Quant:
    kind: str  # "sup" | "inf"
    var: Var
    body: "Formula"

    def __post_init__(self):
        if self.kind not in ("sup", "inf"):
            raise LogicError(f"unknown quantifier {self.kind!r}")


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(scalar(self.value)))


@dataclass(frozen=True, eq=False)
class BlackBox:
    """An opaque quantifier-free formula given by a vectorized callable.

    ``fn`` receives a dict mapping each free variable name to an array of
    points (batched along leading axes) and returns real values.
    """

    name: str
    fn: Callable
    free: tuple[Var, ...]
    interval: Interval
    lipschitz: tuple[float, ...]


Formula = Union[Dist, Pred, Conn, Quant, Num, BlackBox]


def conn(op: str, *args, param=None) -> Conn:
    return Conn(op, tuple(args), None if param is None else Fraction(scalar(param)))


def sup(var: Var, body) -> Quant:
    return Quant("sup", var, body)


def inf(var: Var, body) -> Quant:
    return Quant("inf", var, body)


def sup_all(vars_: Sequence[Var], body):
    for v in reversed(vars_):
        body = Quant("sup", v, body)
    return body


def inf_all(vars_: Sequence[Var], body):
    for v in reversed(vars_):
        body = Quant("inf", v, body)
    return body


def fold(op: str, parts: Sequence):
    """Left fold of a binary connective; a single part is returned as is."""
    parts = list(parts)
    if not parts:
        raise LogicError(f"{op} of nothing")
    acc = parts[0]
    for p in parts[1:]:
        acc = Conn(op, (acc, p))
    return acc


def formula_free_vars(phi) -> tuple[Var, ...]:
    seen: dict[Var, None] = {}
    _collect_free(phi, frozenset(), seen)
    return tuple(seen)


def _collect_free(phi, bound, seen):
    if isinstance(phi, (Dist, Pred)):
        terms = (phi.left, phi.right) if isinstance(phi, Dist) else phi.args
        for t in terms:
            for v in term_vars(t):
                if v.name not in bound:
                    seen.setdefault(v, None)
    elif isinstance(phi, Conn):
        for a in phi.args:
            _collect_free(a, bound, seen)
    elif isinstance(phi, Quant):
        _collect_free(phi.body, bound | {phi.var.name}, seen)
    elif isinstance(phi, BlackBox):
        for v in phi.free:
            if v.name not in bound:
                seen.setdefault(v, None)


def is_sentence(phi) -> bool:
    return not formula_free_vars(phi)


def is_quantifier_free(phi) -> bool:
    if isinstance(phi, Quant):
        return False
    if isinstance(phi, Conn):
        return all(is_quantifier_free(a) for a in phi.args)
    return True


def atoms_terms(phi) -> Iterator[Term]:
    """All top-level terms appearing in atoms of ``phi``."""
    if isinstance(phi, Dist):
        yield phi.left
        yield phi.right
    elif isinstance(phi, Pred):
        yield from phi.args
    elif isinstance(phi, Conn):
        for a in phi.args:
            yield from atoms_terms(a)
    elif isinstance(phi, Quant):
        yield from atoms_terms(phi.body)


def substitute(phi, mapping: Mapping[Var, Term]):
    """Replace free variables by terms (no capture checks: bound names are kept distinct by callers)."""
    if isinstance(phi, Dist):
        return Dist(substitute_term(phi.left, mapping), substitute_term(phi.right, mapping))
    if isinstance(phi, Pred):
        return Pred(phi.symbol, tuple(substitute_term(a, mapping) for a in phi.args))
    if isinstance(phi, Conn):
        return Conn(phi.op, tuple(substitute(a, mapping) for a in phi.args), phi.param)
    if isinstance(phi, Quant):
        inner = {k: v for k, v in mapping.items() if k.name != phi.var.name}
        return Quant(phi.kind, phi.var, substitute(phi.body, inner))
    if isinstance(phi, BlackBox) and any(v in mapping for v in phi.free):
        raise LogicError("cannot substitute into a black-box formula")
    return phi
