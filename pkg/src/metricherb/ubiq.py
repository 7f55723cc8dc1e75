"""Finite-structure checks around finitely partitioned structures.

* ``check_finitely_partitioned``: are all permutations inside each block
  automorphisms? Checked on adjacent transpositions, which generate the
  product of the block symmetric groups.
* ``check_ultrahomogeneous``: does every isomorphism between substructures
  generated by at most s elements extend to an automorphism? Tuples of the
  same quantifier-free type must lie in one orbit of Aut(M).
* ``expand_partition``: add one unary predicate per block.
* ``classify_equivariant_function``: is an Aut-invariant function
  piecewise a projection, a named constant or (with functions) a term?
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .logic.parser import format_term
from .logic.syntax import Var
from .models.base import ModelError
from .models.discrete import ELEMENT, DiscreteStructure

MAX_UNIVERSE = 12
MAX_TUPLE = 4


class PartitionError(ModelError):
    pass


class UbiqBudgetError(Exception):
    pass


def _labels(M, idx):
    return [M.labels[int(i)] for i in idx]


def _text(lab):
    return ".".join(str(p) for p in lab) if isinstance(lab, tuple) else str(lab)


# --------------------------------------------------------------------------
# automorphisms


def automorphism_failure(M: DiscreteStructure, perm: Sequence[int]):
    """None if ``perm`` (index map i -> perm[i]) is an automorphism, else (symbol, argument tuple)."""
    p = np.asarray(perm)
    for name, idx in sorted(M.constants.items()):
        if p[idx] != idx:
            return name, (idx,)
    for r, tab in sorted(M.relations.items()):
        moved = tab[np.ix_(*([p] * tab.ndim))]
        bad = np.argwhere(moved != tab)
        if len(bad):
            return r, tuple(int(i) for i in bad[0])
    for f, tab in sorted(M.functions.items()):
        lhs = tab[np.ix_(*([p] * tab.ndim))]  # f(p a)
        rhs = p[tab]  # p f(a)
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            return f, tuple(int(i) for i in bad[0])
    return None


def is_automorphism(M, perm) -> bool:
    return automorphism_failure(M, perm) is None


def _invariants(M: DiscreteStructure) -> np.ndarray:
    """Per-element counts that every automorphism preserves (for pruning)."""
    n = len(M)
    cols = [np.array([i in M.constants.values() for i in range(n)], dtype=np.int64)]
    for _, tab in sorted(M.relations.items()):
        for ax in range(tab.ndim):
            cols.append(np.moveaxis(tab, ax, 0).reshape(n, -1).sum(axis=1))
        if tab.ndim >= 1:
            cols.append(tab[(np.arange(n),) * tab.ndim].astype(np.int64))
    for _, tab in sorted(M.functions.items()):
        cols.append(np.bincount(tab.ravel(), minlength=n))
        cols.append((tab[(np.arange(n),) * tab.ndim] == np.arange(n)).astype(np.int64))
    return np.stack(cols, axis=1)


class _Extender:
    """Backtracking search for automorphisms extending a partial map."""

    def __init__(self, M: DiscreteStructure):
        self.M = M
        self.n = len(M)
        inv = _invariants(M)
        keys = {}
        self.colour = np.array([keys.setdefault(tuple(row), len(keys)) for row in inv.tolist()])
        self.rels = [t for _, t in sorted(M.relations.items())]
        self.funs = [t for _, t in sorted(M.functions.items())]
        self.nodes = 0

    def _consistent(self, mp, a, b):
        """Adding a -> b keeps every relation/function fact among mapped elements."""
        dom = [x for x in range(self.n) if mp[x] >= 0] + [a]
        img = {**{x: int(mp[x]) for x in dom[:-1]}, a: b}
        for tab in self.rels:
            k = tab.ndim
            for tup in itertools.product(dom, repeat=k):
                if a not in tup:
                    continue
                if tab[tup] != tab[tuple(img[x] for x in tup)]:
                    return False
        for tab in self.funs:
            k = tab.ndim
            for tup in itertools.product(dom, repeat=k):
                val = int(tab[tup])
                if val in img and (a in tup or val == a):
                    if int(tab[tuple(img[x] for x in tup)]) != img[val]:
                        return False
        return True

    def extend(self, partial: Mapping[int, int], budget: int = 10_000_000):
        n = self.n
        mp = np.full(n, -1, dtype=np.int64)
        used = np.zeros(n, dtype=bool)
        fixed = {c: c for c in self.M.constants.values()}
        if any(fixed.get(a, b) != b for a, b in partial.items()):
            return None
        partial = {**fixed, **partial}
        for a, b in partial.items():
            if used[b] or mp[a] >= 0 or self.colour[a] != self.colour[b]:
                return None
            mp[a], used[b] = b, True
        for a, b in partial.items():  # recheck pairwise facts of the seed
            mp[a] = -1
            used[b] = False
            if not self._consistent(mp, a, b):
                return None
            mp[a], used[b] = b, True
        order = [x for x in range(n) if mp[x] < 0]
        result = self._search(mp, used, order, 0, budget)
        return None if result is None else [int(v) for v in result]

    def _search(self, mp, used, order, pos, budget):
        if pos == len(order):
            return mp.copy() if is_automorphism(self.M, mp) else None
        self.nodes += 1
        if self.nodes > budget:
            raise UbiqBudgetError("automorphism search exceeded its node budget")
        a = order[pos]
        for b in range(self.n):
            if used[b] or self.colour[b] != self.colour[a]:
                continue
            if not self._consistent(mp, a, b):
                continue
            mp[a], used[b] = b, True
            got = self._search(mp, used, order, pos + 1, budget)
            mp[a], used[b] = -1, False
            if got is not None:
                return got
        return None


def automorphism_generators(M: DiscreteStructure) -> list[list[int]]:
    """Strong generating set of Aut(M): one coset representative per point of each stabilizer orbit."""
    ext = _Extender(M)
    n = len(M)
    gens: list[list[int]] = []
    fixed: dict[int, int] = {}
    for base in range(n):
        stab_gens = [g for g in gens if all(g[x] == x for x in fixed)]
        orbit = {base}
        frontier = [base]
        while frontier:  # orbit under what is already known
            x = frontier.pop()
            for g in stab_gens:
                if g[x] not in orbit:
                    orbit.add(g[x])
                    frontier.append(g[x])
        for b in range(n):
            if b in orbit or ext.colour[b] != ext.colour[base]:
                continue
            g = ext.extend({**fixed, base: b})
            if g is not None:
                gens.append(g)
                stab_gens.append(g)
                frontier = list(orbit)
                while frontier:
                    x = frontier.pop()
                    for h in stab_gens:
                        if h[x] not in orbit:
                            orbit.add(h[x])
                            frontier.append(h[x])
        fixed[base] = base
    return gens


# --------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class PartitionWitness:
    blocks: tuple[tuple, ...]
    ok: bool
    failing: tuple | None = None  # (a, b) labels of the transposition
    symbol: str | None = None
    tuple_: tuple | None = None  # argument tuple (labels) where the symbol breaks
    checked: int = 0

    def to_json(self) -> dict:
        return {
            "blocks": [[_text(x) for x in b] for b in self.blocks],
            "ok": self.ok,
            "failing": None if self.failing is None else [_text(x) for x in self.failing],
            "symbol": self.symbol,
            "tuple": None if self.tuple_ is None else [_text(x) for x in self.tuple_],
            "checked": self.checked,
        }


def _blocks(M, partition) -> list[list[int]]:
    blocks = [[int(M.to_internal(ELEMENT, x)) for x in b] for b in partition]
    flat = [x for b in blocks for x in b]
    if any(not b for b in blocks):
        raise PartitionError("empty block")
    if len(flat) != len(set(flat)):
        raise PartitionError("blocks overlap")
    if sorted(flat) != list(range(len(M))):
        missing = sorted(set(range(len(M))) - set(flat))
        raise PartitionError(f"blocks do not cover the universe; missing {_labels(M, missing)}")
    return blocks


def check_finitely_partitioned(M: DiscreteStructure, partition) -> PartitionWitness:
    blocks = _blocks(M, partition)
    lab = tuple(tuple(_labels(M, b)) for b in blocks)
    checked = 0
    for b in blocks:
        for a, c in zip(b, b[1:]):
            perm = np.arange(len(M))
            perm[a], perm[c] = c, a
            checked += 1
            fail = automorphism_failure(M, perm)
            if fail is not None:
                sym, tup = fail
                return PartitionWitness(lab, False, (M.labels[a], M.labels[c]), sym, tuple(_labels(M, tup)), checked)
    return PartitionWitness(lab, True, checked=checked)


def expand_partition(M: DiscreteStructure, partition, prefix: str = "R") -> DiscreteStructure:
    blocks = _blocks(M, partition)
    extra = {}
    for i, b in enumerate(blocks):
        mask = np.zeros(len(M), dtype=bool)
        mask[b] = True
        extra[f"{prefix}{i + 1}"] = mask
    return M.with_relations(extra)


# --------------------------------------------------------------------------
# ultrahomogeneity


@dataclass(frozen=True)
class UltrahomogeneityReport:
    ok: bool
    max_size: int
    pairs_checked: int
    failures: tuple = ()  # ((a-tuple labels), (b-tuple labels)) partial isomorphisms that do not extend
    generators: int = 0

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "max_size": self.max_size,
            "pairs_checked": self.pairs_checked,
            "failures": [[[_text(x) for x in a], [_text(x) for x in b]] for a, b in self.failures],
            "generators": self.generators,
        }


def _closure(M: DiscreteStructure, tup):
    """Elements generated by ``tup`` (and the constants), each with the first term path reaching it."""
    paths = {}
    order = []
    for i, a in enumerate(tup):
        if a not in paths:
            paths[a] = ("x", i)
            order.append(a)
    for c, a in sorted(M.constants.items()):
        if a not in paths:
            paths[a] = ("c", c)
            order.append(a)
    fns = sorted(M.functions.items())
    grew = True
    while grew:
        grew = False
        current = list(order)
        for f, tab in fns:
            for args in itertools.product(current, repeat=tab.ndim):
                v = int(tab[args])
                if v not in paths:
                    paths[v] = ("f", f, args)
                    order.append(v)
                    grew = True
    return paths, order


def _partial_iso(M: DiscreteStructure, a, b):
    """Map of the substructure generated by a onto the one generated by b, or None if not an isomorphism."""
    pa, oa = _closure(M, a)
    pb, ob = _closure(M, b)
    if len(oa) != len(ob):
        return None
    mp = {}
    for x in oa:
        kind = pa[x]
        if kind[0] == "x":
            y = b[kind[1]]
        elif kind[0] == "c":
            y = M.constants[kind[1]]
        else:
            y = int(M.functions[kind[1]][tuple(mp[z] for z in kind[2])])
        mp[x] = y
    if len(set(mp.values())) != len(mp) or set(mp.values()) != set(ob):
        return None
    for i, x in enumerate(a):
        if mp[x] != b[i]:
            return None
    dom = list(mp)
    for tab in M.relations.values():
        for tup in itertools.product(dom, repeat=tab.ndim):
            if tab[tup] != tab[tuple(mp[x] for x in tup)]:
                return None
    for tab in M.functions.values():
        for tup in itertools.product(dom, repeat=tab.ndim):
            if mp.get(int(tab[tup]), -1) != int(tab[tuple(mp[x] for x in tup)]):
                return None
    return mp


def check_ultrahomogeneous(M: DiscreteStructure, max_size: int = 3, max_universe: int = MAX_UNIVERSE,
                           max_tuple: int = MAX_TUPLE, report_limit: int = 20) -> UltrahomogeneityReport:
    """Every partial isomorphism a -> b between tuples of length <= max_size extends to an automorphism."""
    n = len(M)
    if n > max_universe or max_size > max_tuple:
        raise UbiqBudgetError(f"exhaustive check limited to |M| <= {max_universe} and s <= {max_tuple}")
    gens = automorphism_generators(M)
    failures = []
    pairs = 0
    for k in range(1, max_size + 1):
        tuples = list(itertools.permutations(range(n), k))
        index = {t: i for i, t in enumerate(tuples)}
        # orbits of Aut(M) on k-tuples via union-find over the generators
        parent = list(range(len(tuples)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for g in gens:
            for i, t in enumerate(tuples):
                j = index[tuple(g[x] for x in t)]
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
        reps: dict[int, tuple] = {}
        for i, t in enumerate(tuples):
            reps.setdefault(find(i), t)
        orbit_reps = list(reps.values())
        # two orbits with isomorphic generated substructures break ultrahomogeneity
        for i, a in enumerate(orbit_reps):
            for b in orbit_reps[i + 1:]:
                pairs += 1
                if _partial_iso(M, a, b) is not None:
                    failures.append((tuple(_labels(M, a)), tuple(_labels(M, b))))
                    if len(failures) >= report_limit:
                        return UltrahomogeneityReport(False, max_size, pairs, tuple(failures), len(gens))
    return UltrahomogeneityReport(not failures, max_size, pairs, tuple(failures), len(gens))


# --------------------------------------------------------------------------
# equivariant functions


@dataclass(frozen=True)
class EquivariantCover:
    equivariant: bool
    covered: bool
    terms: tuple[str, ...] = ()
    counterexample: dict | None = None  # non-equivariance witness or uncovered tuple
    verified: bool = False
    pieces: dict = field(default_factory=dict)  # term -> number of tuples it is used for

    def to_json(self) -> dict:
        return {
            "equivariant": self.equivariant,
            "covered": self.covered,
            "terms": list(self.terms),
            "counterexample": self.counterexample,
            "verified": self.verified,
            "pieces": dict(sorted(self.pieces.items())),
        }


def classify_equivariant_function(M: DiscreteStructure, f, depth: int = 2, generators=None) -> EquivariantCover:
    """Cover an Aut(M)-equivariant table ``f`` (shape (|M|,)*n, entries element indices) by terms.

    Relational structures use the projections x1..xn and the named
    constants; structures with functions use all terms up to ``depth``.
    """
    from .herbrand.search import greedy_cover
    from .logic.semantics import QuantBudget, _Evaluator
    from .normalizer import enumerate_terms

    f = np.asarray(f, dtype=np.int64)
    N = len(M)
    if f.ndim < 1 or any(s != N for s in f.shape) or f.min() < 0 or f.max() >= N:
        raise ModelError("f must be a total table of element indices")
    gens = automorphism_generators(M) if generators is None else [list(g) for g in generators]
    for g in gens:
        p = np.asarray(g)
        lhs = f[np.ix_(*([p] * f.ndim))]
        bad = np.argwhere(lhs != p[f])
        if len(bad):
            a = tuple(int(i) for i in bad[0])
            return EquivariantCover(False, False, counterexample={
                "automorphism": [_text(M.labels[i]) for i in g],
                "tuple": [_text(M.labels[i]) for i in a]})

    xs = [Var(f"x{i + 1}", ELEMENT) for i in range(f.ndim)]
    if M.functions:
        cands = list(enumerate_terms(M.sig, xs, depth, M))
    else:
        cands = list(xs) + [t for t in enumerate_terms(M.sig, [], 0, M)]
    grid = np.indices(f.shape).reshape(f.ndim, -1)
    env = {v.name: grid[i] for i, v in enumerate(xs)}
    ev = _Evaluator(M, QuantBudget())
    target = f.reshape(-1)
    vals = np.stack([np.broadcast_to(np.asarray(ev.term(t, env)), target.shape) for t in cands])
    covers = vals == target
    chosen, left = greedy_cover(covers, np.where(covers, 0.0, 1.0), np.ones(len(target), dtype=bool),
                                [(i,) for i in range(len(cands))], polish=False)
    texts = tuple(format_term(cands[c]) for c in chosen)
    if left.any():
        i = int(np.flatnonzero(left)[0])
        return EquivariantCover(True, False, texts, {"tuple": [_text(M.labels[int(a)]) for a in grid[:, i]]})
    # exhaustive re-check, independent of the cover bookkeeping
    hit = np.zeros(len(target), dtype=bool)
    pieces = {}
    for c, txt in zip(chosen, texts):
        new = (vals[c] == target) & ~hit
        pieces[txt] = int(new.sum())
        hit |= vals[c] == target
    return EquivariantCover(True, True, texts, None, bool(hit.all()), pieces)


def function_table(M: DiscreteStructure, fn, arity: int) -> np.ndarray:
    """Table of a Python function on labels (helper for building test targets)."""
    out = np.empty((len(M),) * arity, dtype=np.int64)
    for idx in itertools.product(range(len(M)), repeat=arity):
        out[idx] = M.index(fn(*(M.labels[i] for i in idx)))
    return out
