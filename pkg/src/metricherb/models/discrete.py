"""Classical finite structures as {0,1}-metric structures.

Elements are stored as indices into ``labels``. A relation R is exposed as a
predicate valued in {0, 1} with value 0 exactly when R holds, so the usual
reading "0 is true" carries over; d(a, b) is 0 or 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np

from ..logic.syntax import ConstantSymbol, Interval, PredicateSymbol, Signature, Sort, simple_family
from .base import ModelError, Structure
from .groups import FiniteGroup, cyclic, direct_product

ELEMENT = Sort("M", Fraction(1))


@dataclass(frozen=True, eq=False)
class DiscreteStructure(Structure):
    labels: tuple
    relations: Mapping[str, np.ndarray] = field(default_factory=dict)
    functions: Mapping[str, np.ndarray] = field(default_factory=dict)
    constants: Mapping[str, int] = field(default_factory=dict)
    name: str = "discrete"

    is_finite = True

    def __post_init__(self):
        n = len(self.labels)
        if n == 0:
            raise ModelError("empty universe")
        if len(set(self.labels)) != n:
            raise ModelError("duplicate element labels")
        rels, fns = {}, {}
        for rname, tab in self.relations.items():
            tab = np.asarray(tab, dtype=bool)
            if tab.ndim < 1 or any(s != n for s in tab.shape):
                raise ModelError(f"relation {rname}: table shape {tab.shape} is not total over {n} elements")
            tab.setflags(write=False)
            rels[rname] = tab
        for fname, tab in self.functions.items():
            tab = np.asarray(tab)
            if tab.ndim < 1 or any(s != n for s in tab.shape):
                raise ModelError(f"function {fname}: table shape {tab.shape} is not total over {n} elements")
            if not np.issubdtype(tab.dtype, np.integer) or tab.min() < 0 or tab.max() >= n:
                raise ModelError(f"function {fname}: values must be element indices")
            tab = tab.astype(np.int64)
            tab.setflags(write=False)
            fns[fname] = tab
        consts = {}
        for cname, idx in self.constants.items():
            if not 0 <= int(idx) < n:
                raise ModelError(f"constant {cname}: index {idx} out of range")
            consts[cname] = int(idx)
        clash = set(rels) & set(fns) | (set(rels) | set(fns)) & set(consts)
        if clash:
            raise ModelError(f"symbol names used twice: {sorted(clash)}")
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "functions", fns)
        object.__setattr__(self, "constants", consts)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})
        unit = Interval(Fraction(0), Fraction(1))
        sig = Signature(
            [ELEMENT],
            {f: simple_family(f, (ELEMENT,) * t.ndim, ELEMENT) for f, t in fns.items()},
            {r: PredicateSymbol(r, (ELEMENT,) * t.ndim, unit, (1.0,) * t.ndim) for r, t in rels.items()},
            {c: ConstantSymbol(c, ELEMENT) for c in consts},
            ELEMENT,
            {"relations": "value 0 iff the relation holds"},
        )
        object.__setattr__(self, "sig", sig)

    def __len__(self):
        return len(self.labels)

    # -- interpretation ---------------------------------------------------
    def fn(self, sym, args):
        tab = self.functions[sym.name]
        return tab[tuple(np.asarray(a) for a in args)]

    def pred(self, sym, args):
        tab = self.relations[sym.name]
        return 1.0 - tab[tuple(np.asarray(a) for a in args)].astype(float)

    def dist(self, sort, a, b):
        return (np.asarray(a) != np.asarray(b)).astype(float)

    def const(self, name):
        try:
            return np.int64(self.constants[name])
        except KeyError:
            raise ModelError(f"constant {name!r} not interpreted") from None

    def to_internal(self, sort, value):
        if isinstance(value, (int, np.integer)) and value not in self._index:
            if 0 <= value < len(self.labels):
                return np.int64(value)
        try:
            return np.int64(self._index[value])
        except (KeyError, TypeError):
            raise ModelError(f"{value!r} is not an element") from None

    def to_external(self, sort, value):
        return self.labels[int(value)]

    def index(self, label) -> int:
        return self._index[label]

    # -- universe ---------------------------------------------------------
    def size(self, sort):
        return len(self.labels)

    def elements(self):
        return np.arange(len(self.labels), dtype=np.int64)

    def sample(self, sort, count, rng):
        return rng.integers(0, len(self.labels), size=count)

    def special_points(self, sort):
        return np.array(sorted(set(self.constants.values())), dtype=np.int64)

    def holds(self, rel: str, *elems) -> bool:
        return bool(self.relations[rel][tuple(elems)])

    def apply(self, fn: str, *elems) -> int:
        return int(self.functions[fn][tuple(elems)])

    # -- derived ----------------------------------------------------------
    def with_relations(self, extra: Mapping[str, np.ndarray]) -> "DiscreteStructure":
        clash = set(extra) & (set(self.relations) | set(self.functions) | set(self.constants))
        if clash:
            raise ModelError(f"symbols already defined: {sorted(clash)}")
        return DiscreteStructure(self.labels, {**self.relations, **extra}, self.functions, self.constants, self.name)

    def with_constants(self, extra: Mapping[str, Hashable]) -> "DiscreteStructure":
        idx = {k: self.to_internal(ELEMENT, v) for k, v in extra.items()}
        return DiscreteStructure(self.labels, self.relations, self.functions, {**self.constants, **idx}, self.name)

    def permute(self, perm: Sequence[int]) -> dict:
        """Images of all tables under the element permutation ``perm`` (test helper)."""
        p = np.asarray(perm)
        inv = np.argsort(p)
        out = {}
        for r, t in self.relations.items():
            out[r] = t[np.ix_(*([inv] * t.ndim))]
        for f, t in self.functions.items():
            out[f] = p[t[np.ix_(*([inv] * t.ndim))]]
        return out


def build_discrete(elements, relations=None, functions=None, constants=None, name="discrete") -> DiscreteStructure:
    """Build from label-level data.

    ``relations`` maps a name to either a boolean array or a set of label
    tuples; ``functions`` maps a name to an index array or a dict from label
    tuples (or single labels for unary functions) to labels; ``constants``
    maps names to labels. Partial function tables are rejected.
    """
    labels = tuple(elements)
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)

    def lookup(lab):
        try:
            return index[lab]
        except KeyError:
            raise ModelError(f"{lab!r} is not an element") from None

    rels = {}
    for r, spec in (relations or {}).items():
        if isinstance(spec, np.ndarray):
            rels[r] = spec
            continue
        tuples = [tuple(t) for t in spec]
        arity = {len(t) for t in tuples}
        if len(arity) != 1:
            raise ModelError(f"relation {r}: mixed or unknown arity")
        tab = np.zeros((n,) * arity.pop(), dtype=bool)
        for t in tuples:
            tab[tuple(lookup(x) for x in t)] = True
        rels[r] = tab
    fns = {}
    for f, spec in (functions or {}).items():
        if isinstance(spec, np.ndarray):
            fns[f] = spec
            continue
        items = list(spec.items())
        if not items:
            raise ModelError(f"function {f}: empty table")
        keys = [k if isinstance(k, tuple) and k not in index else (k,) for k, _ in items]
        arity = len(keys[0])
        tab = np.full((n,) * arity, -1, dtype=np.int64)
        for key, (_, val) in zip(keys, items):
            if len(key) != arity:
                raise ModelError(f"function {f}: mixed arity")
            tab[tuple(lookup(x) for x in key)] = lookup(val)
        if (tab < 0).any():
            missing = tuple(labels[i] for i in np.argwhere(tab < 0)[0])
            raise ModelError(f"function {f}: table is partial, no value at {missing}")
        fns[f] = tab
    consts = {c: lookup(v) for c, v in (constants or {}).items()}
    return DiscreteStructure(labels, rels, fns, consts, name)


# --------------------------------------------------------------------------
# builders


def kpartite(k: int, s: int, constants: bool = True) -> DiscreteStructure:
    """Complete k-partite graph with parts of size s; labels (part, i).

    With ``constants`` each part p gets a named element ``c<p+1>`` = (p, 0).
    """
    labels = [(p, i) for p in range(k) for i in range(s)]
    part = np.array([p for p, _ in labels])
    E = part[:, None] != part[None, :]
    consts = {f"c{p + 1}": p * s for p in range(k)} if constants else {}
    return DiscreteStructure(tuple(labels), {"E": E}, {}, consts, f"kpartite({k},{s})")


def union_complete(m: int, s: int) -> DiscreteStructure:
    """Disjoint union of m copies of K_s (no loops); labels (copy, i)."""
    labels = [(c, i) for c in range(m) for i in range(s)]
    copy = np.array([c for c, _ in labels])
    E = (copy[:, None] == copy[None, :]) & ~np.eye(len(labels), dtype=bool)
    return DiscreteStructure(tuple(labels), {"E": E}, {}, {}, f"union_complete({m},{s})")


def path_graph(n: int) -> DiscreteStructure:
    idx = np.arange(n)
    E = np.abs(idx[:, None] - idx[None, :]) == 1
    return DiscreteStructure(tuple(range(n)), {"E": E}, {}, {}, f"path({n})")


def grid(n: int, size: int) -> DiscreteStructure:
    """{0..size-1}^n with E_i(a,b) iff a_i = b_i and f(a_1..a_n) = (a_11, .., a_nn)."""
    labels = list(itertools.product(range(size), repeat=n))
    index = {lab: i for i, lab in enumerate(labels)}
    coords = np.array(labels)
    rels = {f"E{i + 1}": coords[:, i][:, None] == coords[None, :, i] for i in range(n)}
    N = len(labels)
    tab = np.empty((N,) * n, dtype=np.int64)
    for args in itertools.product(range(N), repeat=n):
        tab[args] = index[tuple(labels[args[i]][i] for i in range(n))]
    return DiscreteStructure(tuple(labels), rels, {"f": tab}, {}, f"grid({n},{size})")


def group_structure(G: FiniteGroup, constants: Mapping[str, str] | None = None, op: str = "mul",
                    inv: str | None = "inv", identity: str | None = "e", name: str = "group") -> DiscreteStructure:
    """A finite group as a classical structure in the language (op, inv, identity)."""
    labels = tuple(G.elements)
    idx = {g: i for i, g in enumerate(labels)}
    mul = np.array([[idx[G.mul(a, b)] for b in labels] for a in labels], dtype=np.int64)
    fns = {op: mul}
    if inv:
        fns[inv] = np.array([idx[G.inverse(a)] for a in labels], dtype=np.int64)
    consts = {identity: idx[G.identity]} if identity else {}
    for c, g in (constants or {}).items():
        consts[c] = idx[g]
    return DiscreteStructure(labels, {}, fns, consts, name)


def elementary_abelian(p: int, m: int, F: FiniteGroup | None = None, constants: Mapping[str, str] | None = None,
                       op: str = "mul", inv: str | None = "inv", identity: str | None = "e") -> DiscreteStructure:
    """(Z/p)^m x F; element labels join the factor labels with '.'."""
    factors = [cyclic(p) for _ in range(m)] + ([F] if F is not None else [])
    G = direct_product(factors)
    name = f"(Z/{p})^{m}" + (f" x F{len(F)}" if F is not None else "")
    return group_structure(G, constants, op, inv, identity, name)


def vector_space_f2(m: int, constants: Mapping[str, str] | None = None) -> DiscreteStructure:
    """(F_2)^m with + only (plus named constants)."""
    return elementary_abelian(2, m, constants=constants, op="add", inv=None, identity=None)
