"""Axiom sets as lists of closed conditions, and residual checking.

A condition is a sentence sigma with the requirement sigma = 0. Checking
evaluates sigma in the structure and compares the upper end of the
enclosure with a tolerance. Sampled enclosures are reported as advisory:
they come from search, not from a net.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..logic.semantics import QuantBudget, eval_formula
from ..logic.syntax import (
    SAMPLED,
    App,
    Conn,
    Const,
    Dist,
    Enclosure,
    Num,
    Pred,
    Var,
    atoms_terms,
    conn,
    fold,
    inf_all,
    is_sentence,
    subterms,
    sup_all,
)
from ..scalars import GaussQ, format_scalar
from .base import ModelError
from .hilbert import BALL, COMPLEX, HilbertStructure, roots_of_unity

UNIVERSAL, EXISTENTIAL = "universal", "existential"

REAL_GRID = ((Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 2), Fraction(-1, 2)), (Fraction(-1, 4), Fraction(3, 4)))
COMPLEX_GRID = ((GaussQ(Fraction(0), Fraction(1, 2)), Fraction(1, 2)),)


@dataclass(frozen=True)
class Condition:
    name: str
    sentence: object
    kind: str = UNIVERSAL
    note: str = ""

    def __post_init__(self):
        if not is_sentence(self.sentence):
            raise ModelError(f"condition {self.name}: formula has free variables")


@dataclass(frozen=True)
class Theory:
    name: str
    conditions: tuple[Condition, ...]
    untested: tuple[str, ...] = ()  # scheme instances beyond the model's scale

    def __iter__(self):
        return iter(self.conditions)

    def names(self) -> list[str]:
        return [c.name for c in self.conditions]


@dataclass(frozen=True)
class AxiomResult:
    name: str
    kind: str
    enclosure: Enclosure
    passed: bool
    advisory: bool

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "enclosure": self.enclosure.to_json(),
            "passed": self.passed,
            "advisory": self.advisory,
        }


@dataclass(frozen=True)
class AxiomReport:
    theory: str
    tol: float
    results: tuple[AxiomResult, ...]
    untested: tuple[str, ...] = ()
    seed: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def max_residual(self) -> float:
        return max((r.enclosure.hi for r in self.results), default=0.0)

    def __getitem__(self, name: str) -> AxiomResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "theory": self.theory,
            "tolerance": self.tol,
            "seed": self.seed,
            "passed": self.passed,
            "results": [r.to_json() for r in self.results],
            "not_testable_at_this_scale": list(self.untested),
        }


def check_axioms(S, T: Theory, tol: float = 1e-6, budget: QuantBudget | None = None) -> AxiomReport:
    budget = budget or QuantBudget()
    for c in T.conditions:
        _check_symbols(S, c)
    results = []
    for c in T.conditions:
        enc = eval_formula(S, c.sentence, {}, budget)
        results.append(AxiomResult(c.name, c.kind, enc, enc.hi <= tol, enc.mode == SAMPLED))
    return AxiomReport(T.name, tol, tuple(results), T.untested, budget.seed)


def _check_symbols(S, c: Condition):
    sig = S.sig
    for t in atoms_terms(c.sentence):
        for s in subterms(t):
            if isinstance(s, App) and s.fn.name not in sig.functions:
                raise ModelError(f"signature mismatch: {c.name} uses {s.fn.name}, not interpreted here")
            if isinstance(s, Const) and s.name not in sig.constants:
                raise ModelError(f"signature mismatch: {c.name} uses constant {s.name}")
    for p in _preds(c.sentence):
        if p.symbol.name not in sig.predicates:
            raise ModelError(f"signature mismatch: {c.name} uses predicate {p.symbol.name}")


def _preds(phi):
    if isinstance(phi, Pred):
        yield phi
    elif isinstance(phi, Conn):
        for a in phi.args:
            yield from _preds(a)
    elif hasattr(phi, "body"):
        yield from _preds(phi.body)


# --------------------------------------------------------------------------
# formula helpers


def widen(phi, lo, hi):
    """Same values as phi, interval enlarged to contain [lo, hi]."""
    return conn("max", conn("min", phi, Num(hi)), Num(lo))


class _Lang:
    def __init__(self, S: HilbertStructure):
        self.S = S
        self.sig = S.sig
        self.x, self.y, self.z = (Var(n, BALL) for n in "xyz")
        self.zero = Const(self.sig.constant("0"))

    def f(self, a, b, s, t):
        return App(self.sig.function("f", (a, b)), (s, t))

    def op(self, name, t):
        return App(self.sig.function(name), (t,))

    def ip(self, s, t, part="ip"):
        return Pred(self.sig.predicate(part), (s, t))

    def scal(self, a, s):
        return self.f(a, 0, s, self.zero)

    def grid(self):
        return REAL_GRID + (COMPLEX_GRID if self.S.field == COMPLEX else ())


def _max_over(parts):
    return fold("max", parts)


# --------------------------------------------------------------------------
# theories


def hilbert_theory(S: HilbertStructure) -> Theory:
    """Universal axioms for the unit ball, in metric / inner-product form.

    Squares are not expressible with the chosen connectives, so the link
    between metric and inner product is given through the affine symbols
    and linearity of the inner product instead of d(x,y)^2 = <x-y,x-y>.
    """
    L = _Lang(S)
    x, y, z = L.x, L.y, L.z
    conds = []
    if S.field == COMPLEX:
        sym = conn(
            "max",
            conn("absdiff", L.ip(x, y, "rip"), L.ip(y, x, "rip")),
            conn("absdiff", L.ip(x, y, "iip"), conn("neg", L.ip(y, x, "iip"))),
        )
    else:
        sym = conn("absdiff", L.ip(x, y), L.ip(y, x))
    conds.append(Condition("ip-symmetric", sup_all([x, y], sym)))
    conds.append(Condition("ip-positive", sup_all([x], conn("sub", conn("neg", L.ip(x, x)), param=0))))
    half = Fraction(1, 2)
    conds.append(
        Condition(
            "metric-from-norm",
            sup_all([x, y], conn("absdiff", conn("scale", Dist(x, y), param=half), Dist(L.f(half, -half, x, y), L.zero))),
        )
    )
    conds.append(Condition("f-unit", sup_all([x, y], Dist(L.f(1, 0, x, y), x))))
    conds.append(
        Condition("f-swap", sup_all([x, y], _max_over([Dist(L.f(a, b, x, y), L.f(b, a, y, x)) for a, b in L.grid()])))
    )
    lin = []
    for a, b in REAL_GRID:
        rhs = conn("csum", widen(conn("scale", L.ip(x, z), param=a), -1, 1), widen(conn("scale", L.ip(y, z), param=b), -1, 1))
        lin.append(conn("absdiff", L.ip(L.f(a, b, x, y), z), rhs))
    conds.append(Condition("ip-linear", sup_all([x, y, z], _max_over(lin)), note="real coefficient grid"))
    return Theory("hilbert", tuple(conds))


def _operator_linear(L: _Lang, name: str) -> object:
    x, y = L.x, L.y
    parts = [Dist(L.op(name, L.f(a, b, x, y)), L.f(a, b, L.op(name, x), L.op(name, y))) for a, b in L.grid()]
    return sup_all([x, y], _max_over(parts))


def _preserves_ip(L: _Lang, name: str) -> object:
    x, y = L.x, L.y
    Ux, Uy = L.op(name, x), L.op(name, y)
    parts = [conn("absdiff", L.ip(Ux, Uy), L.ip(x, y))]
    if L.S.field == COMPLEX:
        parts.append(conn("absdiff", L.ip(Ux, Uy, "iip"), L.ip(x, y, "iip")))
    return sup_all([x, y], _max_over(parts))


def spectrum_axiom(S: HilbertStructure, sigma) -> object:
    """inf_x (|<x,x> - 1| csum d(Ux, sigma x))."""
    L = _Lang(S)
    x = L.x
    return inf_all([x], conn("csum", conn("absdiff", L.ip(x, x), Num(1)), Dist(L.op("U", x), L.scal(sigma, x))))


def unitary_theory(S: HilbertStructure, k: int = 6, with_base: bool = True) -> Theory:
    """T_U: linearity, inner product, inverses, spectrum over the 2^k-th roots of unity."""
    if S.eigenvalues is None:
        raise ModelError("structure has no unitary")
    L = _Lang(S)
    x = L.x
    conds = [
        Condition("U-linear", _operator_linear(L, "U")),
        Condition("U-preserves-ip", _preserves_ip(L, "U")),
        Condition("U-Uinv", sup_all([x], Dist(L.op("U", L.op("Uinv", x)), x))),
        Condition("Uinv-U", sup_all([x], Dist(L.op("Uinv", L.op("U", x)), x))),
    ]
    for j, sigma in enumerate(roots_of_unity(2**k)):
        conds.append(Condition(f"spectrum[{j}/{2 ** k}]", spectrum_axiom(S, sigma), EXISTENTIAL, format_scalar(sigma)))
    base = hilbert_theory(S).conditions if with_base else ()
    return Theory("unitary", tuple(conds) + base)


def _orthonormal_part(L: _Lang, vs: Sequence[Var]):
    parts = []
    for i in range(len(vs)):
        for j in range(i, len(vs)):
            parts.append(conn("absdiff", L.ip(vs[i], vs[j]), Num(1 if i == j else 0)))
    return parts


def projection_scheme(S: HilbertStructure, m: int, fixed: bool) -> object:
    L = _Lang(S)
    vs = [Var(f"v{i + 1}", BALL) for i in range(m)]
    target = (lambda v: v) if fixed else (lambda v: L.zero)
    parts = _orthonormal_part(L, vs) + [Dist(L.op("P", v), target(v)) for v in vs]
    return inf_all(vs, _max_over(parts))


def projection_theory(S: HilbertStructure, scheme_max: int | None = None, with_base: bool = True) -> Theory:
    """T_P; scheme instances beyond rank (resp. corank) are listed as untested."""
    if S.projection_rank is None:
        raise ModelError("structure has no projection")
    L = _Lang(S)
    x, y = L.x, L.y
    k, n = S.projection_rank, S.n
    scheme_max = n if scheme_max is None else scheme_max
    conds = [
        Condition("P-linear", _operator_linear(L, "P")),
        Condition("P-idempotent", sup_all([x], Dist(L.op("P", L.op("P", x)), L.op("P", x)))),
        Condition("P-self-adjoint", sup_all([x, y], conn("absdiff", L.ip(L.op("P", x), y), L.ip(x, L.op("P", y))))),
    ]
    untested = []
    for m in range(1, scheme_max + 1):
        if m <= k:
            conds.append(Condition(f"P-range-dim[{m}]", projection_scheme(S, m, True), EXISTENTIAL))
        else:
            untested.append(f"P-range-dim[{m}]")
    for m in range(1, scheme_max + 1):
        if m <= n - k:
            conds.append(Condition(f"P-kernel-dim[{m}]", projection_scheme(S, m, False), EXISTENTIAL))
        else:
            untested.append(f"P-kernel-dim[{m}]")
    base = hilbert_theory(S).conditions if with_base else ()
    return Theory("projection", tuple(conds) + base, tuple(untested))


def group_theory(S: HilbertStructure, with_base: bool = True) -> Theory:
    if S.group is None:
        raise ModelError("structure has no group action")
    L = _Lang(S)
    x = L.x
    G = S.group
    conds = []
    for g in G.elements:
        name = "g" + g
        ginv = "g" + G.inverse(g)
        conds.append(Condition(f"{name}-linear", _operator_linear(L, name)))
        conds.append(Condition(f"{name}-preserves-ip", _preserves_ip(L, name)))
        conds.append(Condition(f"{name}-onto", sup_all([x], Dist(L.op(name, L.op(ginv, x)), x))))
    comp = [Dist(L.op("g" + a, L.op("g" + b, x)), L.op("g" + G.mul(a, b), x)) for a in G.elements for b in G.elements]
    conds.append(Condition("action", sup_all([x], _max_over(comp))))
    base = hilbert_theory(S).conditions if with_base else ()
    return Theory("group", tuple(conds) + base)


def theory_for(S: HilbertStructure, **kw) -> Theory:
    kind = S.theory
    if kind == "unitary":
        return unitary_theory(S, **{k: v for k, v in kw.items() if k in ("k", "with_base")})
    if kind == "projection":
        return projection_theory(S, **{k: v for k, v in kw.items() if k in ("scheme_max", "with_base")})
    if kind == "group":
        return group_theory(S, **{k: v for k, v in kw.items() if k == "with_base"})
    return hilbert_theory(S)
