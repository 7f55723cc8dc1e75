"""Unit balls of finite-dimensional Hilbert spaces and their expansions.

The one-sorted signature has the constant 0, a binary symbol ``f[a,b]`` for
every pair of scalars with ``|a| + |b| <= 1`` (interpreted as ``a x + b y``)
and the inner product ``ip`` valued in [-1, 1]. Over the complex field ``ip``
is the real part; ``rip`` is an alias and ``iip`` the imaginary part.

Expansions add a diagonal unitary ``U``/``Uinv``, a coordinate projection
``P`` or unitary group actions ``g<name>``. All operators act in the fixed
standard basis, which is also why the basis vectors are offered to the
quantifier search as special points.

``ms_bound=n`` adds a second sort ``W`` (ball of radius 2n, metric bound 4n)
with ``lin[l,m]: B x B -> W`` for ``|l|, |m| <= n`` and ``wip`` valued in
``[-4n^2, 4n^2]``: a desk-scale stand-in for the many-sorted Hilbert
language, used to exercise :func:`metricherb.logic.rescale_to_unit`.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping

import numpy as np

from ..logic.syntax import (
    ConstantSymbol,
    FunctionFamily,
    FunctionSymbol,
    Interval,
    PredicateSymbol,
    Signature,
    SignatureError,
    Sort,
    simple_family,
)
from ..scalars import GaussQ, is_real, modulus, scalar, format_scalar
from .base import ModelError, Structure, ball_grid, ball_grid_size
from .groups import FiniteGroup

REAL, COMPLEX = "R", "C"
COEFF_TOL = 1e-12
BALL_TOL = 1e-9

BALL = Sort("B", Fraction(2))


def _c(x) -> complex:
    return complex(x)


@dataclass(frozen=True, eq=False)
class HilbertStructure(Structure):
    n: int
    field: str = REAL
    constants: Mapping[str, np.ndarray] = dc_field(default_factory=dict)
    eigenvalues: tuple | None = None
    projection_rank: int | None = None
    group: FiniteGroup | None = None
    group_matrices: Mapping[str, np.ndarray] | None = None
    ms_bound: int | None = None

    is_finite = False

    def __post_init__(self):
        if self.n < 1:
            raise ModelError("dimension must be at least 1")
        if self.field not in (REAL, COMPLEX):
            raise ModelError(f"field must be 'R' or 'C', got {self.field!r}")
        consts = {}
        for name, v in self.constants.items():
            arr = np.asarray(v, dtype=self.dtype)
            if arr.shape != (self.n,):
                raise ModelError(f"constant {name} has shape {arr.shape}, expected ({self.n},)")
            if np.linalg.norm(arr) > 1 + BALL_TOL:
                raise ModelError(f"constant {name} lies outside the unit ball (norm {np.linalg.norm(arr):.6g})")
            if name == "0" or not name.isidentifier():
                raise ModelError(f"bad constant name {name!r}")
            arr.setflags(write=False)
            consts[name] = arr
        object.__setattr__(self, "constants", consts)
        object.__setattr__(self, "sig", self._build_signature())
        object.__setattr__(self, "_cache", {})

    # -- construction helpers ---------------------------------------------
    @property
    def dtype(self):
        return np.float64 if self.field == REAL else np.complex128

    def _build_signature(self) -> Signature:
        real = self.field == REAL

        def make_f(params):
            a, b = params
            if real and not (is_real(a) and is_real(b)):
                raise SignatureError("complex coefficients in a real Hilbert signature")
            if modulus(a) + modulus(b) > 1 + COEFF_TOL:
                raise SignatureError(
                    f"f[{format_scalar(a)},{format_scalar(b)}] needs |a|+|b| <= 1, got {modulus(a) + modulus(b):.6g}"
                )
            return FunctionSymbol("f", (a, b), (BALL, BALL), BALL, (modulus(a), modulus(b)), "affine")

        functions = {"f": FunctionFamily("f", 2, make_f)}
        unit = Interval(Fraction(-1), Fraction(1))
        predicates = {"ip": PredicateSymbol("ip", (BALL, BALL), unit, (1.0, 1.0), "ip")}
        notes = {"ip": "real part of the inner product"}
        if not real:
            predicates["rip"] = PredicateSymbol("rip", (BALL, BALL), unit, (1.0, 1.0), "ip")
            predicates["iip"] = PredicateSymbol("iip", (BALL, BALL), unit, (1.0, 1.0), "iip")
            notes["iip"] = "imaginary part of the inner product"
        constants = {"0": ConstantSymbol("0", BALL)}
        constants.update({k: ConstantSymbol(k, BALL) for k in self.constants})
        sorts = [BALL]
        if self.eigenvalues is not None:
            functions["U"] = simple_family("U", (BALL,), BALL, kind="unitary")
            functions["Uinv"] = simple_family("Uinv", (BALL,), BALL, kind="unitary_inv")
        if self.projection_rank is not None:
            functions["P"] = simple_family("P", (BALL,), BALL, kind="projection")
        if self.group is not None:
            for g in self.group.elements:
                functions["g" + g] = simple_family("g" + g, (BALL,), BALL, kind="group")
        if self.ms_bound is not None:
            nb = self.ms_bound
            wide = Sort("W", Fraction(4 * nb))
            sorts.append(wide)

            def make_lin(params):
                l, m = params
                if real and not (is_real(l) and is_real(m)):
                    raise SignatureError("complex coefficients in a real Hilbert signature")
                if max(modulus(l), modulus(m)) > nb + COEFF_TOL:
                    raise SignatureError(f"lin coefficients must be bounded by {nb}")
                return FunctionSymbol("lin", (l, m), (BALL, BALL), wide, (modulus(l), modulus(m)), "lin")

            functions["lin"] = FunctionFamily("lin", 2, make_lin)
            predicates["wip"] = PredicateSymbol(
                "wip", (wide, wide), Interval(Fraction(-4 * nb * nb), Fraction(4 * nb * nb)), (2.0 * nb, 2.0 * nb), "ip"
            )
        return Signature(sorts, functions, predicates, constants, BALL, notes)

    @property
    def theory(self) -> str:
        if self.eigenvalues is not None:
            return "unitary"
        if self.projection_rank is not None:
            return "projection"
        if self.group is not None:
            return "group"
        return "hilbert"

    def radius(self, sort: Sort) -> float:
        return 1.0 if sort.name == "B" else 2.0 * self.ms_bound

    def _arrays(self):
        c = self._cache
        if "eig" not in c:
            c["eig"] = None if self.eigenvalues is None else np.array([_c(w) for w in self.eigenvalues])
            if self.projection_rank is not None:
                mask = np.zeros(self.n)
                mask[: self.projection_rank] = 1.0
                c["mask"] = mask
        return c

    def _params(self, sym: FunctionSymbol):
        key = ("p", sym)
        if key not in self._cache:
            conv = float if self.field == REAL else _c
            self._cache[key] = tuple(conv(p) for p in sym.params)
        return self._cache[key]

    # -- interpretation -----------------------------------------------------
    def fn(self, sym, args):
        kind = sym.kind
        if kind in ("affine", "lin"):
            a, b = self._params(sym)
            return a * args[0] + b * args[1]
        if kind == "unitary":
            return args[0] * self._arrays()["eig"]
        if kind == "unitary_inv":
            return args[0] * np.conj(self._arrays()["eig"])
        if kind == "projection":
            return args[0] * self._arrays()["mask"]
        if kind == "group":
            M = self.group_matrices[sym.name[1:]]
            return args[0] @ M.T
        raise ModelError(f"{sym.name} is not interpreted in this structure")

    def pred(self, sym, args):
        a, b = args
        ip = np.sum(a * np.conj(b), axis=-1)
        val = np.imag(ip) if sym.kind == "iip" else np.real(ip)
        lo, hi = float(sym.interval.lo), float(sym.interval.hi)
        return np.clip(val, lo, hi)

    def dist(self, sort, a, b):
        d = np.linalg.norm(a - b, axis=-1)
        return np.minimum(d, float(sort.bound))

    def const(self, name):
        if name == "0":
            return np.zeros(self.n, dtype=self.dtype)
        try:
            return self.constants[name]
        except KeyError:
            raise ModelError(f"constant {name!r} not interpreted") from None

    def point_shape(self, sort):
        return (self.n,)

    def to_internal(self, sort, value):
        arr = np.asarray(value, dtype=self.dtype)
        if arr.shape[-1:] != (self.n,):
            raise ModelError(f"point of shape {arr.shape} in dimension {self.n}")
        return arr

    # -- universe -----------------------------------------------------------
    def real_dim(self, sort):
        return self.n if self.field == REAL else 2 * self.n

    def _from_real(self, pts):
        if self.field == REAL:
            return pts
        return pts[..., : self.n] + 1j * pts[..., self.n :]

    def sample(self, sort, count, rng):
        d = self.real_dim(sort)
        g = rng.standard_normal((count, d))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = rng.random(count) ** (1.0 / d)
        return self._from_real(g * (r * self.radius(sort))[:, None])

    def special_points(self, sort):
        key = ("special", sort)
        if key not in self._cache:
            eye = np.eye(self.n, dtype=self.dtype)
            pts = [np.zeros((1, self.n), dtype=self.dtype), eye, -eye]
            if self.field == COMPLEX:
                pts += [1j * eye, -1j * eye]
            if sort.name == "B":
                pts += [c[None, :] for c in self.constants.values()]
            arr = np.concatenate(pts) * (1.0 if sort.name == "B" else self.radius(sort))
            arr.setflags(write=False)
            self._cache[key] = arr
        return self._cache[key]

    def net(self, sort, delta):
        key = ("net", sort, delta)
        if key not in self._cache:
            pts = self._from_real(ball_grid(self.real_dim(sort), self.radius(sort), delta))
            pts.setflags(write=False)
            self._cache[key] = pts
        return self._cache[key]

    def net_size(self, sort, delta):
        return ball_grid_size(self.real_dim(sort), self.radius(sort), delta)

    def project(self, sort, pts):
        R = self.radius(sort)
        norms = np.linalg.norm(pts, axis=-1, keepdims=True)
        return pts * np.where(norms > R, R / np.maximum(norms, 1e-300), 1.0)

    # -- derived structures --------------------------------------------------
    def with_constants(self, extra: Mapping[str, np.ndarray]) -> "HilbertStructure":
        clash = set(extra) & set(self.constants)
        if clash:
            raise ModelError(f"constants already defined: {sorted(clash)}")
        return dataclasses.replace(self, constants={**self.constants, **extra})

    def describe(self) -> dict:
        """JSON model description (see :mod:`metricherb.models.modelfile`)."""
        from .modelfile import describe_hilbert

        return describe_hilbert(self)


def build_hilbert(n: int, field: str = REAL, constants: Mapping[str, object] | None = None, ms_bound: int | None = None):
    return HilbertStructure(n, field, dict(constants or {}), ms_bound=ms_bound)


def expand_unitary(S: HilbertStructure, eigenvalues) -> HilbertStructure:
    if S.field != COMPLEX:
        raise ModelError("a unitary expansion needs the complex field")
    eig = tuple(scalar(w) for w in eigenvalues)
    if len(eig) != S.n:
        raise ModelError(f"{len(eig)} eigenvalues for dimension {S.n}")
    for w in eig:
        if abs(modulus(w) - 1) > BALL_TOL:
            raise ModelError(f"eigenvalue {format_scalar(w)} is not on the unit circle")
    return dataclasses.replace(S, eigenvalues=eig)


def expand_projection(S: HilbertStructure, rank: int) -> HilbertStructure:
    if not 1 <= rank <= S.n - 1:
        raise ModelError(f"projection rank {rank} outside [1, {S.n - 1}]")
    return dataclasses.replace(S, projection_rank=int(rank))


def expand_group_action(S: HilbertStructure, group: FiniteGroup, matrices: Mapping[str, object]) -> HilbertStructure:
    """Interpret ``g<name>`` by the given unitary matrices.

    Missing elements are filled in from products of given ones when possible;
    the result must be a homomorphism on the whole table.
    """
    mats = {}
    for g, M in matrices.items():
        if g not in group.elements:
            raise ModelError(f"{g!r} is not a group element")
        M = np.asarray(M, dtype=complex if S.field == COMPLEX else float)
        if M.shape != (S.n, S.n):
            raise ModelError(f"matrix for {g} has shape {M.shape}")
        if not np.allclose(M @ M.conj().T, np.eye(S.n), atol=1e-9):
            raise ModelError(f"matrix for {g} is not unitary")
        mats[g] = M
    mats.setdefault(group.identity, np.eye(S.n, dtype=complex if S.field == COMPLEX else float))
    changed = True
    while changed:
        changed = False
        for a, b in list(((a, b) for a in list(mats) for b in list(mats))):
            c = group.mul(a, b)
            if c not in mats:
                mats[c] = mats[a] @ mats[b]
                changed = True
    missing = [g for g in group.elements if g not in mats]
    if missing:
        raise ModelError(f"no matrices for {missing}; they are not generated by the given ones")
    for a in group.elements:
        for b in group.elements:
            if not np.allclose(mats[a] @ mats[b], mats[group.mul(a, b)], atol=1e-9):
                raise ModelError(f"matrices disagree with the table at {a}*{b}")
    for M in mats.values():
        M.setflags(write=False)
    return dataclasses.replace(S, group=group, group_matrices=mats)


def roots_of_unity(m: int) -> tuple:
    from ..scalars import root_of_unity

    return tuple(root_of_unity(k, m) for k in range(m))
