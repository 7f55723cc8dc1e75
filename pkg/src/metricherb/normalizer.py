"""Affine normal forms for Hilbert-type terms.

Every operator in these signatures is linear, so a term is a linear
combination of *monomials* ``op(atom)`` where the atom is a variable or a
named constant and ``op`` is the identity, a power of U, the projection P or
a group element. Coefficients are exact (:class:`fractions.Fraction` or
:class:`~metricherb.scalars.GaussQ`).

Per theory the monomials that can occur are:

=========== ==============================================
hilbert     x
unitary     U^j x  (j in Z, the Laurent window)
projection  x, P x
group       g x    (g in G; the identity is written x)
=========== ==============================================

The constant part ``v`` is the sub-combination over named constants. The
l1 mass of all coefficients is at most 1 for every term, by the same
induction as in the one-variable case: ``f[a,b](s,t)`` has mass at most
``|a| m(s) + |b| m(t)``, and the operators do not increase mass. This
multivariate bound is our own derivation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from .logic.syntax import App, Const, LogicError, Signature, Var
from .logic.parser import format_term
from .scalars import exact_modulus, format_scalar, is_real, modulus, parse_scalar, scalar

THEORIES = ("hilbert", "unitary", "projection", "group")
_ALLOWED = {
    "hilbert": {"affine"},
    "unitary": {"affine", "unitary", "unitary_inv"},
    "projection": {"affine", "projection"},
    "group": {"affine", "group"},
}
IDENTITY: tuple = ()


class NormalizeError(LogicError):
    pass


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Monomial:
    is_const: bool  # variables sort first
    atom: str
    op: tuple = IDENTITY  # (), ("U", j), ("P",), ("g", name)

    def op_text(self) -> str:
        if not self.op:
            return "id"
        if self.op[0] == "U":
            return f"U^{self.op[1]}"
        if self.op[0] == "P":
            return "P"
        return f"g:{self.op[1]}"

    @staticmethod
    def parse_op(text: str) -> tuple:
        if text == "id":
            return IDENTITY
        if text.startswith("U^"):
            return ("U", int(text[2:]))
        if text == "P":
            return ("P",)
        if text.startswith("g:"):
            return ("g", text[2:])
        raise NormalizeError(f"bad monomial operator {text!r}")

    def sort_key(self):
        op = self.op
        rank = (0, 0, "") if not op else (1, op[1], "") if op[0] == "U" else (2, 0, "") if op[0] == "P" else (3, 0, op[1])
        return (self.is_const, self.atom, rank)


@dataclass(frozen=True)
class AffineNormalForm:
    theory: str
    coeffs: Mapping[Monomial, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.theory not in THEORIES:
            raise NormalizeError(f"unknown theory tag {self.theory!r}")
        clean = {m: scalar(c) for m, c in self.coeffs.items() if scalar(c) != 0}
        ordered = dict(sorted(clean.items(), key=lambda kv: kv[0].sort_key()))
        object.__setattr__(self, "coeffs", ordered)

    def __eq__(self, other):
        return isinstance(other, AffineNormalForm) and self.theory == other.theory and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.theory, tuple(self.coeffs.items())))

    # -- views ---------------------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(m.atom for m in self.coeffs if not m.is_const))

    def coefficient(self, atom: str, op: tuple = IDENTITY, is_const: bool = False):
        return self.coeffs.get(Monomial(is_const, atom, op), Fraction(0))

    def lam(self, var: str):
        """Hilbert coefficient of ``var``."""
        return self.coefficient(var)

    def window(self, var: str) -> dict[int, object]:
        """Laurent coefficients j -> alpha_j of ``var`` (unitary theory)."""
        out = {}
        for m, c in self.coeffs.items():
            if not m.is_const and m.atom == var:
                out[0 if not m.op else m.op[1]] = c
        return dict(sorted(out.items()))

    def pair(self, var: str) -> tuple:
        """(alpha, beta) with the term reading alpha x + beta P(x) + v."""
        return self.coefficient(var), self.coefficient(var, ("P",))

    def group_terms(self, var: str, identity: str = "e") -> list[tuple]:
        out = []
        for m, c in self.coeffs.items():
            if not m.is_const and m.atom == var:
                out.append((c, identity if not m.op else m.op[1]))
        return out

    def constant_part(self) -> "AffineNormalForm":
        return AffineNormalForm(self.theory, {m: c for m, c in self.coeffs.items() if m.is_const})

    def l1_mass(self) -> float:
        return sum(modulus(c) for c in self.coeffs.values())

    def l1_mass_exact(self) -> Fraction | None:
        total = Fraction(0)
        for c in self.coeffs.values():
            e = exact_modulus(c)
            if e is None:
                return None
            total += e
        return total

    def max_coefficient(self) -> float:
        return max((modulus(c) for c in self.coeffs.values()), default=0.0)

    # -- arithmetic -----------------------------------------------------------
    def scaled(self, a) -> "AffineNormalForm":
        a = scalar(a)
        return AffineNormalForm(self.theory, {m: a * c for m, c in self.coeffs.items()})

    def plus(self, other: "AffineNormalForm") -> "AffineNormalForm":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, Fraction(0)) + c
        return AffineNormalForm(self.theory, out)

    def mapped(self, fn) -> "AffineNormalForm":
        """Apply ``fn`` to every monomial's operator, merging collisions."""
        out: dict = {}
        for m, c in self.coeffs.items():
            m2 = Monomial(m.is_const, m.atom, fn(m.op))
            out[m2] = out.get(m2, Fraction(0)) + c
        return AffineNormalForm(self.theory, out)

    # -- serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "theory": self.theory,
            "terms": [
                {"atom": m.atom, "kind": "const" if m.is_const else "var", "op": m.op_text(), "coeff": format_scalar(c)}
                for m, c in self.coeffs.items()
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "AffineNormalForm":
        coeffs = {}
        for t in data["terms"]:
            m = Monomial(t["kind"] == "const", t["atom"], Monomial.parse_op(t["op"]))
            coeffs[m] = parse_scalar(t["coeff"])
        return cls(data["theory"], coeffs)

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for m, c in self.coeffs.items():
            body = m.atom if not m.op else f"{m.op_text()}({m.atom})"
            parts.append(f"{format_scalar(c)}*{body}")
        return " + ".join(parts)


# --------------------------------------------------------------------------
# normalization


def _compose(theory: str, sym, group):
    kind = sym.kind
    if kind == "unitary" or kind == "unitary_inv":
        step = 1 if kind == "unitary" else -1

        def fn(op):
            j = (op[1] if op else 0) + step
            return ("U", j) if j else IDENTITY

        return fn
    if kind == "projection":
        return lambda op: ("P",)
    if kind == "group":
        h = sym.name[1:]

        def fn(op):
            k = op[1] if op else None
            if group is None:
                if k is not None:
                    raise NormalizeError("composing group elements needs the group table")
                g = h
            else:
                g = group.mul(h, k) if k is not None else h
                if g == group.identity:
                    return IDENTITY
            return ("g", g)

        return fn
    raise NormalizeError(f"no composition rule for {sym.name}")


def normalize_term(t, theory: str, group=None) -> AffineNormalForm:
    """Normal form of ``t`` under the tag's term lemma.

    ``group`` (a :class:`~metricherb.models.groups.FiniteGroup`) is needed
    for the group theory so that words collapse to single elements.
    """
    if theory not in THEORIES:
        raise NormalizeError(f"unknown theory tag {theory!r}")
    allowed = _ALLOWED[theory]
    cache: dict = {}

    def go(s) -> AffineNormalForm:
        if s in cache:
            return cache[s]
        if isinstance(s, Var):
            out = AffineNormalForm(theory, {Monomial(False, s.name): 1})
        elif isinstance(s, Const):
            out = AffineNormalForm(theory, {} if s.name == "0" else {Monomial(True, s.name): 1})
        elif isinstance(s, App):
            kind = s.fn.kind
            if kind not in allowed:
                raise NormalizeError(f"symbol {s.fn.name} is foreign to the {theory} theory")
            if kind == "affine":
                a, b = s.fn.params
                out = go(s.args[0]).scaled(a).plus(go(s.args[1]).scaled(b))
            else:
                out = go(s.args[0]).mapped(_compose(theory, s.fn, group))
        else:
            raise NormalizeError(f"not a term: {s!r}")
        cache[s] = out
        return out

    return go(t)


# --------------------------------------------------------------------------
# realization as a term


def _monomial_term(m: Monomial, sig: Signature, var_sort):
    base = Const(sig.constant(m.atom)) if m.is_const else Var(m.atom, var_sort)
    op = m.op
    if not op:
        return base
    if op[0] == "U":
        sym = sig.function("U" if op[1] > 0 else "Uinv")
        for _ in range(abs(op[1])):
            base = App(sym, (base,))
        return base
    if op[0] == "P":
        return App(sig.function("P"), (base,))
    return App(sig.function("g" + op[1]), (base,))


def _rational_at_least(r: float, cap: float) -> Fraction:
    """A dyadic rational in [r, cap] (cap >= r), as small in height as possible."""
    for k in range(1, 64):
        q = Fraction(math.ceil(r * 2**k), 2**k)
        if q <= Fraction(cap) + Fraction(1, 10**12):
            return q
    return Fraction(r)


def realize(nf: AffineNormalForm, sig: Signature, var_sort=None):
    """A term with normal form ``nf``: f[c1, beta](m1, realize(rest / beta))."""
    var_sort = var_sort or sig.default_sort
    items = list(nf.coeffs.items())
    zero = Const(sig.constant("0"))
    if not items:
        return zero
    (m1, c1), rest = items[0], items[1:]
    t1 = _monomial_term(m1, sig, var_sort)
    if not rest:
        return t1 if c1 == 1 else App(sig.function("f", (c1, 0)), (t1, zero))
    rest_nf = AffineNormalForm(nf.theory, dict(rest))
    exact = rest_nf.l1_mass_exact()
    if exact is not None:
        beta = exact
    else:
        beta = _rational_at_least(rest_nf.l1_mass(), 1.0 - modulus(c1))
    inner = realize(rest_nf.scaled(1 / beta), sig, var_sort)
    return App(sig.function("f", (c1, beta)), (t1, inner))


# --------------------------------------------------------------------------
# evaluation


def _apply_op(S, op, value):
    if not op:
        return value
    if op[0] == "U":
        eig = np.array([complex(w) for w in S.eigenvalues])
        return value * eig ** op[1]
    if op[0] == "P":
        return S.fn(S.sig.function("P"), [value])
    return S.fn(S.sig.function("g" + op[1]), [value])


def evaluate(nf: AffineNormalForm, S, env: Mapping[str, np.ndarray]):
    """sum c * op(atom) with points taken from ``env`` (internal arrays)."""
    total = None
    for m, c in nf.coeffs.items():
        val = S.const(m.atom) if m.is_const else np.asarray(env[m.atom])
        term = complex(c) * _apply_op(S, m.op, val) if not is_real(c) else float(c) * _apply_op(S, m.op, val)
        total = term if total is None else total + term
    if total is None:
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else S.const("0").shape
        return np.zeros(shape, dtype=S.const("0").dtype)
    return total


def constant_vector(nf: AffineNormalForm, S) -> np.ndarray:
    return evaluate(nf.constant_part(), S, {})


# --------------------------------------------------------------------------
# semantic equality


@dataclass(frozen=True)
class TermVerdict:
    equal: bool
    max_distance: float
    witness: dict
    trials: int
    exhaustive: bool


def _assignments(S, names_sorts, trials, rng, exhaustive_cap=100_000):
    """Arrays of assignments: exhaustive on finite sorts when small, else random plus special points."""
    if S.is_finite:
        sizes = [S.size(s) for _, s in names_sorts]
        total = int(np.prod(sizes)) if sizes else 1
        if total <= exhaustive_cap:
            idx = np.indices(sizes).reshape(len(sizes), -1) if sizes else np.zeros((0, 1), dtype=np.int64)
            return {n: idx[i] for i, (n, _) in enumerate(names_sorts)}, total, True
        return {n: S.sample(s, trials, rng) for n, s in names_sorts}, trials, False
    cols = {}
    specials = {n: np.asarray(S.special_points(s)) for n, s in names_sorts}
    k = max((len(v) for v in specials.values()), default=0)
    for n, s in names_sorts:
        sp = specials[n]
        sp = sp[np.arange(k) % len(sp)]  # each var runs through its special points in step
        cols[n] = np.concatenate([sp, S.sample(s, trials, rng)])
    return cols, trials + k, False


def term_equal_semantic(t1, t2, S, trials: int = 100, tol: float = 1e-9, seed: int = 0) -> TermVerdict:
    from .logic.semantics import _Evaluator, QuantBudget
    from .logic.syntax import term_vars

    vs = dict.fromkeys(term_vars(t1) + term_vars(t2))
    names_sorts = [(v.name, v.sort) for v in vs]
    rng = np.random.default_rng(seed)
    env, count, exhaustive = _assignments(S, names_sorts, trials, rng)
    ev = _Evaluator(S, QuantBudget(seed=seed))
    sort = t1.out_sort
    if t2.out_sort != sort:
        return TermVerdict(False, float(sort.bound), {}, 0, exhaustive)
    a, b = ev.term(t1, env), ev.term(t2, env)
    d = np.broadcast_to(S.dist(sort, a, b), (count,))
    i = int(np.argmax(d)) if count else 0
    worst = float(d[i]) if count else 0.0
    witness = {n: S.to_external(s, env[n][i]) for n, s in names_sorts}
    return TermVerdict(worst <= tol, worst, witness, count, exhaustive)


# --------------------------------------------------------------------------
# enumeration


def coefficient_grid(values: Sequence) -> list[tuple]:
    """All pairs (a, b) from ``values`` with |a| + |b| <= 1."""
    vals = [scalar(v) for v in values]
    return [(a, b) for a in vals for b in vals if modulus(a) + modulus(b) <= 1 + 1e-12]


def enumerate_terms(sig: Signature, vars_: Sequence[Var], depth: int, S, grid: Sequence | None = None,
                    max_terms: int = 20_000, max_candidates: int = 2_000_000, fingerprint_points: int = 24,
                    seed: int = 0) -> Iterator:
    """Terms up to ``depth`` in canonical order, one per semantic class on S.

    Parameterized symbols (the affine ``f``) are instantiated on
    ``coefficient_grid(grid)``. Classes are decided exhaustively on finite
    structures and on a fixed set of sample points otherwise.
    """
    from .logic.semantics import _Evaluator, QuantBudget

    sort = vars_[0].sort if vars_ else sig.default_sort
    names_sorts = [(v.name, v.sort) for v in vars_]
    rng = np.random.default_rng(seed)
    env, count, _ = _assignments(S, names_sorts, fingerprint_points, rng)
    if not names_sorts:
        count = 1
    ev = _Evaluator(S, QuantBudget(seed=seed))

    def fingerprint(t):
        val = np.broadcast_to(np.asarray(ev.term(t, env)), (count,) + tuple(S.point_shape(sort)))
        if S.is_finite:
            return val.tobytes()
        q = np.round(np.concatenate([val.real.ravel(), np.imag(val).ravel()]) * 1e9).astype(np.int64)
        return q.tobytes()

    symbols = []
    for name in sorted(sig.functions):
        fam = sig.functions[name]
        if fam.nparams == 0:
            syms = [fam.instantiate(())]
        elif fam.nparams == 2 and grid is not None:
            syms = []
            for a, b in coefficient_grid(grid):
                try:
                    syms.append(fam.instantiate((a, b)))
                except LogicError:
                    continue
        else:
            continue
        for s in syms:
            if all(a == sort for a in s.arg_sorts) and s.out_sort == sort:
                symbols.append(s)

    seen: set = set()
    levels: list[list] = []
    produced = 0
    level0 = list(vars_) + [Const(c) for _, c in sorted(sig.constants.items()) if c.sort == sort]
    current = []
    for t in level0:
        fp = fingerprint(t)
        if fp not in seen:
            seen.add(fp)
            current.append(t)
            produced += 1
            yield t
    levels.append(current)
    work = 0
    for d in range(1, depth + 1):
        older = [t for lvl in levels for t in lvl]
        newest = levels[-1]
        current = []
        newest_ids = {id(t) for t in newest}
        for sym in symbols:
            for args in itertools.product(older, repeat=sym.arity):
                if not any(id(a) in newest_ids for a in args):
                    continue
                work += 1
                if work > max_candidates:
                    raise BudgetExceeded(f"more than {max_candidates} candidate applications at depth {d}")
                t = App(sym, tuple(args))
                fp = fingerprint(t)
                if fp in seen:
                    continue
                seen.add(fp)
                current.append(t)
                produced += 1
                if produced > max_terms:
                    raise BudgetExceeded(f"more than {max_terms} distinct terms by depth {d}")
                yield t
        levels.append(current)
        if not current:
            break


def describe_term(t) -> str:
    return format_term(t)
