"""Random terms, formulas and points shared by the property and acceptance tests."""
from fractions import Fraction

import numpy as np

from metricherb.logic import App, Const, Dist, Num, Pred, Var, conn

COEFFS = [Fraction(p, q) for q in (1, 2, 3, 4, 5, 8) for p in range(-q, q + 1)]


def coeff_pair(rng):
    while True:
        a, b = (COEFFS[i] for i in rng.integers(len(COEFFS), size=2))
        if abs(a) + abs(b) <= 1:
            return a, b


def random_term(S, rng, depth, var_names=("x", "y", "z"), constants=None, unary=()):
    """A random term of depth <= ``depth`` over f[l,m] plus the given unary operators."""
    sort = S.sig.default_sort
    consts = list(S.sig.constants) if constants is None else list(constants)
    if depth == 0 or rng.random() < 0.2:
        if consts and rng.random() < 0.3:
            return Const(S.sig.constants[consts[rng.integers(len(consts))]])
        return Var(var_names[rng.integers(len(var_names))], sort)
    if unary and rng.random() < 0.3:
        name = unary[rng.integers(len(unary))]
        fn = S.sig.functions[name].make(())
        return App(fn, (random_term(S, rng, depth - 1, var_names, constants, unary),))
    fn = S.sig.functions["f"].make(coeff_pair(rng))
    return App(fn, (random_term(S, rng, depth - 1, var_names, constants, unary),
                    random_term(S, rng, depth - 1, var_names, constants, unary)))


def random_formula(S, rng, depth, var_names=("x", "y"), term_depth=2):
    """Quantifier-free formula over d, ip and every connective."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        t1 = random_term(S, rng, term_depth, var_names)
        t2 = random_term(S, rng, term_depth, var_names)
        if r < 0.45:
            return Dist(t1, t2)
        if r < 0.9:
            return Pred(S.sig.predicates["ip"], (t1, t2))
        return Num(COEFFS[rng.integers(len(COEFFS))])
    op = ["neg", "sub", "scale", "addc", "min", "max", "absdiff", "csum"][rng.integers(8)]
    a = random_formula(S, rng, depth - 1, var_names, term_depth)
    if op == "neg":
        return conn("neg", a)
    if op in ("sub", "addc", "scale"):
        q = COEFFS[rng.integers(len(COEFFS))]
        if op == "sub":
            q = abs(q)
        return conn(op, a, param=q)
    return conn(op, a, random_formula(S, rng, depth - 1, var_names, term_depth))


def ball_points(rng, count, n, field="R"):
    d = n if field == "R" else 2 * n
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    pts = g * rng.random((count, 1)) ** (1.0 / d)
    return pts if field == "R" else pts[:, :n] + 1j * pts[:, n:]
