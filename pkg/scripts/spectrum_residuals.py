"""Spectrum axiom value over sigma on the unit circle for a diagonal unitary.

U = diag(exp(2 pi i k / N)). The value at sigma should track the distance
from sigma to the nearest eigenvalue; the script prints both.

    python3 scripts/spectrum_residuals.py --eigs 64 --sigmas 16
"""
import argparse

import numpy as np

from metricherb.logic import eval_formula
from metricherb.models import build_hilbert, expand_unitary, roots_of_unity
from metricherb.models.theories import spectrum_axiom


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eigs", type=int, default=64)
    ap.add_argument("--sigmas", type=int, default=16)
    ap.add_argument("--offset", type=float, default=0.5, help="sigma_j = exp(2 pi i (j / sigmas + offset / eigs))")
    args = ap.parse_args(argv)

    U = expand_unitary(build_hilbert(args.eigs, "C"), roots_of_unity(args.eigs))
    eig = np.exp(2j * np.pi * np.arange(args.eigs) / args.eigs)
    print(f"{'arg/pi':>8} {'value':>10} {'nearest':>10} {'excess':>10}")
    worst = 0.0
    for j in range(args.sigmas):
        s = np.exp(2j * np.pi * (j / args.sigmas + args.offset / args.eigs))
        enc = eval_formula(U, spectrum_axiom(U, complex(s)), {})
        near = float(np.abs(eig - s).min())
        worst = max(worst, enc.hi)
        print(f"{np.angle(s) / np.pi:8.4f} {enc.hi:10.6f} {near:10.6f} {enc.hi - near:10.2e}")
    print(f"max value {worst:.6f}; 2 sin(pi/2N) = {2 * np.sin(np.pi / (2 * args.eigs)):.6f}")


if __name__ == "__main__":
    main()
