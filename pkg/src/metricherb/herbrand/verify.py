"""Independent re-check of certificates.

Exact certificates over finite structures are re-checked by plain Python
loops over the model tables stored inside the certificate: no numpy and
no shared evaluator, only the parser is reused to read the text back.
Sampled certificates of registered targets are re-run from their seed and
compared bit for bit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from ..logic.parser import parse_formula, parse_term
from ..logic.syntax import (
    Conn,
    Const,
    ConstantSymbol,
    Dist,
    Interval,
    Num,
    Pred,
    PredicateSymbol,
    Quant,
    Signature,
    Sort,
    Var,
    simple_family,
)
from .certificate import HerbrandCertificate


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    message: str
    checked: int = 0


class _Tables:
    """A finite structure rebuilt from its JSON description with dict/list tables."""

    def __init__(self, model: dict):
        if model.get("kind") != "discrete" or "elements" not in model:
            raise ValueError("exact verification needs an explicit discrete model")
        self.elements = list(model["elements"])
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.sort = Sort("M", Fraction(1))
        self.rel = {r: {tuple(self.index[e] for e in row) for row in rows} for r, rows in model["relations"].items()}
        arities = model.get("arities", {})
        self.rel_arity = {r: len(rows[0]) if rows else int(arities.get(r, 1)) for r, rows in model["relations"].items()}
        self.fun = {}
        self.fun_arity = {}
        for f, rows in model["functions"].items():
            self.fun[f] = {tuple(self.index[e] for e in row[:-1]): self.index[row[-1]] for row in rows}
            self.fun_arity[f] = len(rows[0]) - 1
        self.const = {c: self.index[e] for c, e in model["constants"].items()}

    def signature(self):
        M = self.sort
        preds = {}
        for r, ar in self.rel_arity.items():
            preds[r] = PredicateSymbol(r, (M,) * ar, Interval(Fraction(0), Fraction(1)), (1.0,) * ar)
        funs = {f: simple_family(f, (M,) * ar, M) for f, ar in self.fun_arity.items()}
        consts = {c: ConstantSymbol(c, M) for c in self.const}
        return Signature([M], funs, preds, consts, M)

    # -- evaluation
    def term(self, t, env):
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            return self.const[t.name]
        return self.fun[t.fn.name][tuple(self.term(a, env) for a in t.args)]

    def interval(self, phi):
        if isinstance(phi, (Dist, Pred)):
            return (Fraction(0), Fraction(1))
        if isinstance(phi, Num):
            return (phi.value, phi.value)
        if isinstance(phi, Quant):
            return self.interval(phi.body)
        lo, hi = self.interval(phi.args[0])
        q = phi.param
        if phi.op == "neg":
            return (lo, hi)
        if phi.op == "sub":
            return (max(lo - q, 0), max(hi - q, 0))
        if phi.op == "scale":
            return (min(q * lo, q * hi), max(q * lo, q * hi))
        if phi.op == "addc":
            return (lo + q, hi + q)
        lo2, hi2 = self.interval(phi.args[1])
        hull = (min(lo, lo2), max(hi, hi2))
        if phi.op in ("min", "max"):
            return hull
        if phi.op == "absdiff":
            return (max(0, lo - hi2, lo2 - hi), max(hi - lo2, hi2 - lo))
        if phi.op == "csum":
            return (min(max(lo + lo2, hull[0]), hull[1]), min(max(hi + hi2, hull[0]), hull[1]))
        raise ValueError(f"unknown connective {phi.op}")

    def value(self, phi, env) -> Fraction:
        if isinstance(phi, Dist):
            return Fraction(int(self.term(phi.left, env) != self.term(phi.right, env)))
        if isinstance(phi, Pred):
            args = tuple(self.term(a, env) for a in phi.args)
            return Fraction(0 if args in self.rel[phi.symbol.name] else 1)
        if isinstance(phi, Num):
            return phi.value
        if isinstance(phi, Quant):
            vals = [self.value(phi.body, {**env, phi.var.name: e}) for e in range(len(self.elements))]
            return max(vals) if phi.kind == "sup" else min(vals)
        if not isinstance(phi, Conn):
            raise ValueError(f"cannot verify opaque formula {phi!r}")
        a = self.value(phi.args[0], env)
        q = phi.param
        if phi.op == "neg":
            lo, hi = self.interval(phi.args[0])
            return lo + hi - a
        if phi.op == "sub":
            return max(a - q, Fraction(0))
        if phi.op == "scale":
            return q * a
        if phi.op == "addc":
            return a + q
        b = self.value(phi.args[1], env)
        if phi.op == "min":
            return min(a, b)
        if phi.op == "max":
            return max(a, b)
        if phi.op == "absdiff":
            return abs(a - b)
        if phi.op == "csum":
            (l1, h1), (l2, h2) = self.interval(phi.args[0]), self.interval(phi.args[1])
            return min(max(a + b, min(l1, l2)), max(h1, h2))
        raise ValueError(f"unknown connective {phi.op}")


def verify_exact(cert: HerbrandCertificate, tol: float | None = None) -> VerifyReport:
    """Check by exhaustion: every x with some y making phi <= tol has a listed witness making phi <= eps + tol."""
    M = _Tables(cert.model)
    tol = cert.extra.get("tolerance", 1e-9) if tol is None else tol
    sig = M.signature()
    phi = parse_formula(cert.formula, sig)
    terms = [[parse_term(txt, sig) for txt in w.text] for w in cert.terms]
    n = len(M.elements)
    checked = 0
    for xs in itertools.product(range(n), repeat=len(cert.x_vars)):
        env = dict(zip(cert.x_vars, xs))
        solvable = any(M.value(phi, {**env, **dict(zip(cert.y_vars, ys))}) <= tol
                       for ys in itertools.product(range(n), repeat=len(cert.y_vars)))
        checked += 1
        if not solvable:
            continue
        ok = False
        for tup in terms:
            ys = [M.term(t, env) for t in tup]
            if M.value(phi, {**env, **dict(zip(cert.y_vars, ys))}) <= cert.epsilon + tol:
                ok = True
                break
        if not ok:
            label = {v: M.elements[i] for v, i in zip(cert.x_vars, xs)}
            return VerifyReport(False, f"no witness covers x = {label}", checked)
    return VerifyReport(True, f"all {checked} x-tuples checked", checked)


def verify_sampled(cert: HerbrandCertificate) -> VerifyReport:
    """Recompute the residual of a registered-target certificate from its seed and compare exactly."""
    import numpy as np

    from ..models.modelfile import model_from_dict
    from ..normalizer import AffineNormalForm, evaluate
    from .search import sample_points
    from .targets import TARGETS

    if cert.target is None or cert.target not in TARGETS:
        return VerifyReport(False, "sampled certificate without a registered target cannot be re-run")
    if any(w.normal_form is None for w in cert.terms):
        return VerifyReport(False, "witness terms lack normal forms")
    S = model_from_dict(cert.model)
    f = TARGETS[cert.target].fn
    sort = S.sig.default_sort
    x = next(iter(cert.x_vars))
    N0 = cert.samples - len(S.special_points(sort))
    env, N, _ = sample_points(S, [_V(x, sort)], N0, cert.seed)
    X = env[x]
    fx = np.asarray(f(X))
    best = np.full(N, np.inf)
    for w in cert.terms:
        nf = AffineNormalForm.from_json(w.normal_form[0])
        y = np.broadcast_to(evaluate(nf, S, {x: X}), X.shape)
        best = np.minimum(best, np.clip(np.linalg.norm(y - fx, axis=-1), 0.0, 2.0))
    resid = float(best.max()) if cert.terms else 0.0
    if N != cert.samples or resid != cert.max_residual:
        return VerifyReport(False, f"residual {resid!r} on {N} samples does not reproduce {cert.max_residual!r}", N)
    if resid > cert.epsilon:
        return VerifyReport(False, f"residual {resid!r} exceeds eps {cert.epsilon!r}", N)
    return VerifyReport(True, f"residual {resid!r} reproduced on {N} samples", N)


def _V(name, sort):
    return Var(name, sort)


def _special_count(S):
    return len(S.special_points(S.sig.default_sort))


def verify_certificate(cert: HerbrandCertificate) -> VerifyReport:
    if cert.mode == "exact":
        try:
            return verify_exact(cert)
        except (ValueError, KeyError) as exc:
            return VerifyReport(False, f"cannot re-check: {exc}")
    return verify_sampled(cert)
