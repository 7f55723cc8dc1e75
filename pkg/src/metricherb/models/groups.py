"""Finite groups given by multiplication tables."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from .base import ModelError


@dataclass(frozen=True)
class FiniteGroup:
    elements: tuple[str, ...]
    table: Mapping[tuple[str, str], str]
    identity: str

    def __post_init__(self):
        els = set(self.elements)
        if len(els) != len(self.elements):
            raise ModelError("duplicate group elements")
        if self.identity not in els:
            raise ModelError(f"identity {self.identity!r} is not an element")
        for a, b in itertools.product(self.elements, repeat=2):
            c = self.table.get((a, b))
            if c is None:
                raise ModelError(f"multiplication table missing {a}*{b}")
            if c not in els:
                raise ModelError(f"{a}*{b} = {c!r} is not an element")
        for a in self.elements:
            if self.table[(self.identity, a)] != a or self.table[(a, self.identity)] != a:
                raise ModelError(f"{self.identity} is not an identity for {a}")
            if not any(self.table[(a, b)] == self.identity for b in self.elements):
                raise ModelError(f"{a} has no inverse")
        for a, b, c in itertools.product(self.elements, repeat=3):
            if self.table[(self.table[(a, b)], c)] != self.table[(a, self.table[(b, c)])]:
                raise ModelError(f"table is not associative at ({a},{b},{c})")

    def mul(self, a: str, b: str) -> str:
        return self.table[(a, b)]

    def inverse(self, a: str) -> str:
        for b in self.elements:
            if self.table[(a, b)] == self.identity:
                return b
        raise ModelError(f"{a} has no inverse")  # unreachable after validation

    def order(self, a: str) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    def __len__(self):
        return len(self.elements)

    def to_json(self) -> dict:
        return {
            "elements": list(self.elements),
            "identity": self.identity,
            "table": [[self.table[(a, b)] for b in self.elements] for a in self.elements],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteGroup":
        els = tuple(data["elements"])
        rows = data["table"]
        if len(rows) != len(els) or any(len(r) != len(els) for r in rows):
            raise ModelError("group table must be |G| x |G|")
        table = {(a, b): rows[i][j] for i, a in enumerate(els) for j, b in enumerate(els)}
        return cls(els, table, data["identity"])


def cyclic(n: int, prefix: str = "") -> FiniteGroup:
    els = tuple(f"{prefix}{i}" for i in range(n))
    table = {(els[i], els[j]): els[(i + j) % n] for i in range(n) for j in range(n)}
    return FiniteGroup(els, table, els[0])


def direct_product(groups: Sequence[FiniteGroup], sep: str = ".") -> FiniteGroup:
    """Elements are the factor labels joined by ``sep``."""
    tuples = list(itertools.product(*(g.elements for g in groups)))
    name = {t: sep.join(t) for t in tuples}
    table = {}
    for s in tuples:
        for t in tuples:
            prod = tuple(g.mul(a, b) for g, a, b in zip(groups, s, t))
            table[(name[s], name[t])] = name[prod]
    ident = name[tuple(g.identity for g in groups)]
    return FiniteGroup(tuple(name[t] for t in tuples), table, ident)
