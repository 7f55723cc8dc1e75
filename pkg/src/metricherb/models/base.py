"""The interface evaluators need from a structure.

Points are numpy arrays. A continuous sort stores a point as an array of
shape ``point_shape(sort)``; a finite sort stores an element index (shape
``()``). Every interpretation method broadcasts over leading batch axes, so
the evaluator can push whole grids of assignments through a formula at once.
"""
from __future__ import annotations

import numpy as np

from ..logic.syntax import FunctionSymbol, PredicateSymbol, Signature, Sort


class ModelError(Exception):
    pass


class Structure:
    sig: Signature
    is_finite: bool = False

    # interpretation ------------------------------------------------------
    def fn(self, sym: FunctionSymbol, args: list) -> np.ndarray:
        raise NotImplementedError

    def pred(self, sym: PredicateSymbol, args: list) -> np.ndarray:
        raise NotImplementedError

    def dist(self, sort: Sort, a, b) -> np.ndarray:
        raise NotImplementedError

    def const(self, name: str):
        raise NotImplementedError

    def point_shape(self, sort: Sort) -> tuple:
        return ()

    # conversion between user values and internal points -----------------
    def to_internal(self, sort: Sort, value):
        return np.asarray(value)

    def to_external(self, sort: Sort, value):
        return value

    # universe access used by quantifier evaluation ----------------------
    def size(self, sort: Sort) -> int:
        raise ModelError(f"sort {sort.name} is not finite")

    def real_dim(self, sort: Sort) -> int:
        raise NotImplementedError

    def sample(self, sort: Sort, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def special_points(self, sort: Sort) -> np.ndarray:
        raise NotImplementedError

    def net(self, sort: Sort, delta: float) -> np.ndarray:
        raise NotImplementedError

    def net_size(self, sort: Sort, delta: float) -> int:
        raise NotImplementedError

    def radius(self, sort: Sort) -> float:
        return 1.0

    def project(self, sort: Sort, pts: np.ndarray) -> np.ndarray:
        return pts

    def interprets(self, name: str) -> bool:
        s = self.sig
        return name in s.functions or name in s.predicates or name in s.constants


def ball_grid(real_dim: int, radius: float, delta: float) -> np.ndarray:
    """A delta-net of the closed ball of given radius in R^real_dim.

    Cubic grid with covering radius delta, restricted to points within
    radius + delta, then pushed radially into the ball. Radial projection onto
    a convex set is 1-Lipschitz, so covering radius stays <= delta.
    """
    h = 2.0 * delta / np.sqrt(real_dim)
    k = int(np.ceil((radius + delta) / h))
    axis = np.arange(-k, k + 1) * h
    grids = np.meshgrid(*([axis] * real_dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    norms = np.linalg.norm(pts, axis=-1)
    pts = pts[norms <= radius + delta]
    norms = norms[norms <= radius + delta]
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return pts * scale[:, None]


def ball_grid_size(real_dim: int, radius: float, delta: float) -> int:
    h = 2.0 * delta / np.sqrt(real_dim)
    k = int(np.ceil((radius + delta) / h))
    return (2 * k + 1) ** real_dim
