"""lam*I + K on the unit ball: net sizes by rank and method, with a sampled residual check.

    python3 scripts/compact_net_demo.py --dim 8 --eps 0.25 --trials 4
"""
import argparse

import numpy as np

from metricherb.herbrand import ball_samples, compact_epsilon_net


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--trials", type=int, default=4)
    ap.add_argument("--points", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    n = args.dim
    print(f"{'rank':>4} {'|K|':>6} {'grid k':>7} {'greedy k':>9} {'worst residual':>15}")
    for r in range(1, 5):
        for _ in range(args.trials):
            K = rng.standard_normal((n, r)) @ rng.standard_normal((r, n))
            K /= np.linalg.norm(K, 2) * (1 + rng.random())
            grid = compact_epsilon_net(K, eps=args.eps, method="grid")
            try:
                greedy = compact_epsilon_net(K, eps=args.eps, method="greedy")
            except ValueError:  # fine grid too large for the greedy pass
                greedy = None
            a = ball_samples(n, args.points, rng)
            worst = max(net.residuals(K, a).max() for net in (grid, greedy) if net is not None)
            gk = "-" if greedy is None else greedy.k
            print(f"{r:4d} {np.linalg.norm(K, 2):6.3f} {grid.k:7d} {gk!s:>9} {worst:15.6f}")


if __name__ == "__main__":
    main()
