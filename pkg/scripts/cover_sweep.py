"""Sweep eps for the bump target f(x) = (1 - |x|^2) x and compare with a 1-D sweep.

The radial reduction: for |x| = r the best piece lam*x leaves |1 - r^2 - lam| * r,
so the smallest k that reaches eps depends only on the lambda grid.

    python3 scripts/cover_sweep.py --dim 8 --mesh 0.25 --eps 0.12 0.13 0.2 0.3
"""
import argparse
import time

import numpy as np

from metricherb.herbrand import CoverNotFound, cover_definable_function
from metricherb.models import build_hilbert


def radial_residual(lams, points=200_001):
    r = np.linspace(0.0, 1.0, points)
    lams = np.asarray(lams, float)
    return float((np.abs(1 - r[:, None] ** 2 - lams[None]).min(axis=1) * r).max())


def radial_min_k(mesh, eps, points=200_001):
    """Smallest subset of the lambda grid whose radial residual is <= eps (brute force)."""
    from itertools import combinations

    grid = np.arange(-1, 1 + 1e-12, mesh)
    grid = grid[(grid >= 0) & (grid <= 1)]  # 1 - r^2 lies in [0, 1]
    for k in range(1, len(grid) + 1):
        for sub in combinations(grid, k):
            if radial_residual(sub, points) <= eps:
                return k, sub
    return None, ()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--mesh", type=float, default=0.25)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.12, 0.13, 0.2, 0.3, 0.5])
    ap.add_argument("--samples", type=int, default=512)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    S = build_hilbert(args.dim)
    grid = np.arange(-1, 1 + 1e-12, args.mesh)
    print(f"radial sup over the full grid: {radial_residual(grid):.6f}")
    print(f"{'eps':>6} {'k':>3} {'residual':>9} {'k_1d':>5} {'seconds':>8}  pieces")
    for eps in args.eps:
        t0 = time.perf_counter()
        try:
            cert = cover_definable_function(S, "bump", eps, mesh=args.mesh, samples=args.samples, seed=args.seed)
            k, res, pieces = cert.k, f"{cert.max_residual:.6f}", ", ".join(w.text[0] for w in cert.terms)
        except CoverNotFound as e:
            k, res, pieces = "-", "-", f"no cover ({e})"
        k1, _ = radial_min_k(args.mesh, eps, points=20_001)
        print(f"{eps:6.3f} {k!s:>3} {res:>9} {k1!s:>5} {time.perf_counter() - t0:8.2f}  {pieces}")


if __name__ == "__main__":
    main()
