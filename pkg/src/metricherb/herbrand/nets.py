"""Finite nets for compact perturbations of scalar maps.

For f = lam*I + K with K of finite rank, every f(a) with |a| <= n lies
within eps of lam*a + v for some v in an eps-net of the ellipsoid K(B_n).
The net is built in the singular coordinates of K: a cube grid of side
h = 2 eps / sqrt(r) (r the rank) has covering radius eps, and a cell is kept
exactly when it meets the ellipsoid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-12


@dataclass(frozen=True)
class CompactNet:
    lam: complex | float
    vectors: np.ndarray  # (k, n)
    eps: float
    radius: float
    rank: int
    method: str

    @property
    def k(self) -> int:
        return len(self.vectors)

    @property
    def pieces(self) -> list[tuple]:
        return [(self.lam, v) for v in self.vectors]

    def residuals(self, K: np.ndarray, points: np.ndarray) -> np.ndarray:
        """min_i |(lam I + K) a - (lam a + v_i)| for each row a of ``points``."""
        Ka = np.asarray(points) @ np.asarray(K).T
        return np.linalg.norm(Ka[:, None, :] - self.vectors[None], axis=-1).min(axis=1)


def _realify(K):
    if np.iscomplexobj(K):
        A, B = K.real, K.imag
        return np.block([[A, -B], [B, A]]), True
    return np.asarray(K, dtype=float), False


def _unrealify(V, n):
    return V[:, :n] + 1j * V[:, n:]


def _axes(K, radius):
    U, s, _ = np.linalg.svd(K)
    r = int((s > RANK_TOL * max(1.0, s[0] if len(s) else 0.0)).sum())
    return U[:, :r], radius * s[:r], r


def _grid_cells(semi, h):
    """Centres j*h of cube cells (side h) meeting the axis ellipsoid with these semi-axes."""
    r = len(semi)
    ranges = [np.arange(-int(np.ceil(a / h + 0.5)), int(np.ceil(a / h + 0.5)) + 1) * h for a in semi]
    pts = np.array(list(itertools.product(*ranges))) if r else np.zeros((1, 0))
    near = np.maximum(np.abs(pts) - h / 2, 0.0)
    keep = ((near / semi) ** 2).sum(axis=1) <= 1 + 1e-12 if r else np.ones(1, dtype=bool)
    return pts[keep]


def compact_epsilon_net(K, radius: float = 1.0, eps: float = 0.1, lam=0.0, method: str = "grid",
                        max_points: int = 2_000_000) -> CompactNet:
    """Pieces (lam, v_i) covering (lam I + K)(B_radius) within eps of lam*a + v_i.

    ``method="grid"`` keeps every grid cell that meets the ellipsoid.
    ``method="greedy"`` builds a finer grid net at eps/8 and covers it greedily
    by balls of radius 7 eps/8 centred at its own points. Same guarantee; the
    count can come out above or below the grid's.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    K = np.asarray(K)
    n = K.shape[1]
    KR, cplx = _realify(K)
    U, semi, r = _axes(KR, radius)
    if r == 0:
        vecs = np.zeros((1, n), dtype=K.dtype if cplx else float)
        return CompactNet(lam, vecs, eps, radius, 0, method)
    if method == "grid":
        coords = _grid_cells(semi, 2 * eps / np.sqrt(r))
    elif method == "greedy":
        fine = _grid_cells(semi, 2 * (eps / 8) / np.sqrt(r))
        if len(fine) ** 2 > max_points * 50:
            raise ValueError(f"greedy net needs {len(fine)} fine points; use method='grid'")
        D = np.linalg.norm(fine[:, None] - fine[None], axis=-1) <= 0.875 * eps
        left = np.ones(len(fine), dtype=bool)
        picked = []
        while left.any():
            j = int(np.argmax((D & left).sum(axis=1)))
            picked.append(j)
            left &= ~D[j]
        coords = fine[picked]
    else:
        raise ValueError(f"unknown method {method!r}")
    if len(coords) > max_points:
        raise ValueError(f"net has {len(coords)} points, above max_points")
    V = coords @ U.T
    if cplx:
        V = _unrealify(V, n)
    return CompactNet(lam, V, eps, radius, r, method)


def ball_samples(n: int, count: int, rng, radius: float = 1.0, field: str = "R") -> np.ndarray:
    d = n if field == "R" else 2 * n
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    pts = g * radius * rng.random((count, 1)) ** (1.0 / d)
    return pts if field == "R" else pts[:, :n] + 1j * pts[:, n:]


# --------------------------------------------------------------------------
# tails


@dataclass(frozen=True)
class TailReport:
    found: bool
    m: int | None
    lambdas: tuple
    worst: float
    samples: int
    seed: int
    per_m: tuple  # worst residual at each tried m

    def to_json(self) -> dict:
        return {"found": self.found, "m": self.m, "lambdas": [str(l) for l in self.lambdas], "worst": self.worst,
                "samples": self.samples, "seed": self.seed, "per_m": list(self.per_m)}


def tail_pieces(S, f, eps: float, lambdas=None, samples: int = 2000, seed: int = 0) -> TailReport:
    """Smallest m with |f(a) - lam a| < eps for some net scalar lam at all sampled a in B_1 orthogonal to e_1..e_m.

    ``lambdas`` defaults to a grid of spacing eps/2 on the unit disk. When no
    m <= n works the report says so (``found`` False) instead of guessing.
    """
    from .search import lambda_grid

    if eps <= 0:
        raise ValueError("eps must be positive")
    n, field = S.n, S.field
    lam = np.array([complex(v) for v in (lambdas if lambdas is not None else lambda_grid(eps / 2, field))])
    if field == "R":
        lam = lam.real
    rng = np.random.default_rng(seed)
    per_m = []
    for m in range(n + 1):
        if m < n:
            a = np.zeros((samples + 2 * (n - m), n), dtype=S.dtype)
            sub = ball_samples(n - m, samples, rng, 1.0, field)
            a[:samples, m:] = sub
            eye = np.eye(n - m)
            a[samples:, m:] = np.concatenate([eye, -eye])
        else:
            a = np.zeros((1, n), dtype=S.dtype)
        fa = np.asarray(f(a))
        res = np.linalg.norm(fa[:, None, :] - lam[None, :, None] * a[:, None, :], axis=-1)
        best = res.min(axis=1)
        worst = float(best.max())
        per_m.append(worst)
        if worst < eps:
            used = sorted({lam[i] for i in np.unique(res.argmin(axis=1))}, key=lambda z: (np.real(z), np.imag(z)))
            return TailReport(True, m, tuple(used), worst, len(a), seed, tuple(per_m))
    return TailReport(False, None, (), min(per_m), samples, seed, tuple(per_m))
