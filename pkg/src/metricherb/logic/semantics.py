"""Intervals, moduli, rescaling and evaluation.

Evaluation is batched: an environment maps each variable name to an array
whose leading axes are batch axes. A block of adjacent quantifiers of the
same kind (``sup x . sup y . ...``) is evaluated jointly by appending one
axis that enumerates tuples, then reducing over it.

How a block is searched depends on the sorts involved:

* finite sorts are exhausted (exact);
* continuous sorts of total real dimension <= ``max_dim`` whose product net
  fits the budget are searched on a delta-net and the result is widened by
  ``L * delta`` per variable (certified);
* anything else is searched by random tuples, the structure's special
  points and a vectorized pattern search (sampled). Sampled results are
  point estimates: for ``inf`` the value is attained by a concrete tuple,
  for ``sup`` likewise from below, and nothing else is promised.
"""
from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .syntax import (
    CERTIFIED,
    EXACT,
    SAMPLED,
    App,
    BlackBox,
    Conn,
    Const,
    Dist,
    Enclosure,
    Interval,
    LogicError,
    Modulus,
    Num,
    Pred,
    Quant,
    Var,
    atoms_terms,
    conn,
    formula_free_vars,
    subterms,
    term_vars,
    worst_mode,
)

DEFAULT_TOL = 1e-9


class DegenerateIntervalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuantBudget:
    delta: float = 0.05
    max_net: int = 200_000
    max_dim: int = 4
    samples: int = 256
    special_tuples: int = 100_000
    refine_rounds: int = 60
    refine_proposals: int = 16
    refine_starts: int = 4
    nested_refine_rounds: int = 20
    max_points: int = 4_000_000
    seed: int = 0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("net mesh delta must be positive")
        for name in ("max_net", "samples", "special_tuples", "max_points"):
            if getattr(self, name) <= 0:
                raise ValueError(f"budget {name} must be positive")


# --------------------------------------------------------------------------
# intervals


def _clampf(x: Fraction, lo: Fraction, hi: Fraction) -> Fraction:
    return min(max(x, lo), hi)


@functools.lru_cache(maxsize=1 << 16)
def interval_of(phi) -> Interval:
    """Value interval of a formula, computed bottom-up.

    min and max report the hull of their arguments' intervals, csum clamps
    to that hull; the other connectives report their exact range.
    """
    if isinstance(phi, Dist):
        return Interval(Fraction(0), phi.left.out_sort.bound)
    if isinstance(phi, Pred):
        return phi.symbol.interval
    if isinstance(phi, Num):
        return Interval(phi.value, phi.value)
    if isinstance(phi, BlackBox):
        return phi.interval
    if isinstance(phi, Quant):
        return interval_of(phi.body)
    if not isinstance(phi, Conn):
        raise TypeError(f"not a formula: {phi!r}")
    I = interval_of(phi.args[0])
    op, q = phi.op, phi.param
    if op == "neg":
        return I
    if op == "sub":
        return Interval(max(I.lo - q, 0), max(I.hi - q, 0))
    if op == "scale":
        a, b = q * I.lo, q * I.hi
        return Interval(min(a, b), max(a, b))
    if op == "addc":
        return Interval(I.lo + q, I.hi + q)
    J = interval_of(phi.args[1])
    H = I.hull(J)
    if op in ("min", "max"):
        return H
    if op == "absdiff":
        return Interval(max(Fraction(0), I.lo - J.hi, J.lo - I.hi), max(I.hi - J.lo, J.hi - I.lo))
    if op == "csum":
        return Interval(_clampf(I.lo + J.lo, H.lo, H.hi), _clampf(I.hi + J.hi, H.lo, H.hi))
    raise LogicError(f"unknown connective {op}")


# --------------------------------------------------------------------------
# moduli


def _add(a: dict, b: Mapping, scale: float = 1.0) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + scale * v
    return out


@functools.lru_cache(maxsize=1 << 16)
def _term_lip(t) -> tuple:
    if isinstance(t, Var):
        return ((t.name, 1.0),)
    if isinstance(t, Const):
        return ()
    acc: dict = {}
    for L, a in zip(t.fn.lipschitz, t.args):
        if L:
            acc = _add(acc, dict(_term_lip(a)), float(L))
    return tuple(sorted(acc.items()))


@functools.lru_cache(maxsize=1 << 16)
def _lip(phi) -> tuple:
    if isinstance(phi, Dist):
        if phi.left == phi.right:
            return ()
        return tuple(sorted(_add(dict(_term_lip(phi.left)), dict(_term_lip(phi.right))).items()))
    if isinstance(phi, Pred):
        acc: dict = {}
        for L, a in zip(phi.symbol.lipschitz, phi.args):
            if L:
                acc = _add(acc, dict(_term_lip(a)), float(L))
        return tuple(sorted(acc.items()))
    if isinstance(phi, Num):
        return ()
    if isinstance(phi, BlackBox):
        return tuple(sorted((v.name, float(L)) for v, L in zip(phi.free, phi.lipschitz)))
    if isinstance(phi, Quant):
        return tuple((k, v) for k, v in _lip(phi.body) if k != phi.var.name)
    op = phi.op
    a = dict(_lip(phi.args[0]))
    if op in ("neg", "sub", "addc"):
        return tuple(sorted(a.items()))
    if op == "scale":
        q = abs(float(phi.param))
        return tuple(sorted((k, q * v) for k, v in a.items()))
    b = dict(_lip(phi.args[1]))
    if op in ("min", "max"):
        keys = set(a) | set(b)
        return tuple(sorted((k, max(a.get(k, 0.0), b.get(k, 0.0))) for k in keys))
    return tuple(sorted(_add(a, b).items()))


def lipschitz_of(phi) -> Modulus:
    """Per-free-variable Lipschitz constants, composed bottom-up."""
    return Modulus({k: v for k, v in _lip(phi) if v > 0})


# --------------------------------------------------------------------------
# rescaling


def _wide_sort(sort) -> bool:
    return sort.name != "B"


def _has_wide_atoms(phi) -> bool:
    if isinstance(phi, Dist):
        return _wide_sort(phi.left.out_sort)
    if isinstance(phi, Pred):
        return any(_wide_sort(s) for s in phi.symbol.arg_sorts)
    if isinstance(phi, Conn):
        return any(_has_wide_atoms(a) for a in phi.args)
    if isinstance(phi, Quant):
        return _wide_sort(phi.var.sort) or _has_wide_atoms(phi.body)
    return False


def rescale_to_unit(phi, sig=None):
    """Return psi with interval [0, 1] and psi = u_I(phi) pointwise.

    ``sig`` is the structure's signature; it supplies ``f``, ``ip`` and
    ``0`` when phi mentions ``lin``/``wip`` atoms. A degenerate interval gives the
    constant formula 0 and a :class:`DegenerateIntervalWarning`.
    """
    psi, degenerate = rescale_with_flag(phi, sig)
    if degenerate:
        warnings.warn(f"formula has a degenerate interval {interval_of(phi)}", DegenerateIntervalWarning, stacklevel=2)
    return psi


def rescale_with_flag(phi, sig=None):
    I = interval_of(phi)
    if I.lo == I.hi:
        return Num(0), True
    if I == Interval(Fraction(0), Fraction(1)) and not _has_wide_atoms(phi):
        return phi, False
    return _rescale(phi, sig), False


def _affine_parts(t):
    """lin[l,m](x,y) -> (l, m, x, y)."""
    if isinstance(t, App) and t.fn.kind == "lin":
        return t.fn.params[0], t.fn.params[1], t.args[0], t.args[1]
    raise LogicError(f"cannot rescale an atom over the wide sort built from {t!r}")


def _ball_affine(sig, a, b, x, y):
    return App(sig.function("f", (a, b)), (x, y))


def _rescale(phi, sig):
    I = interval_of(phi)
    a, b = I.lo, I.hi
    if isinstance(phi, Dist) and _wide_sort(phi.left.out_sort):
        l1, m1, x1, y1 = _affine_parts(phi.left)
        l2, m2, x2, y2 = _affine_parts(phi.right)
        n = phi.left.out_sort.bound / 4
        # half the distance of the shrunk terms; with equal arguments this is
        # |(l1-l2)/4n x + (m1-m2)/4n y|, and its interval is [0, 1] syntactically
        T1 = _ball_affine(sig, l1 / (2 * n), m1 / (2 * n), x1, y1)
        T2 = _ball_affine(sig, l2 / (2 * n), m2 / (2 * n), x2, y2)
        return conn("scale", Dist(T1, T2), param=Fraction(1, 2))
    if isinstance(phi, Pred) and any(_wide_sort(s) for s in phi.symbol.arg_sorts):
        l1, m1, x1, y1 = _affine_parts(phi.args[0])
        l2, m2, x2, y2 = _affine_parts(phi.args[1])
        n = _ms_bound(phi.args[0].out_sort)
        T1 = _ball_affine(sig, l1 / (2 * n), m1 / (2 * n), x1, y1)
        T2 = _ball_affine(sig, l2 / (2 * n), m2 / (2 * n), x2, y2)
        ip = Pred(_ball_ip(sig), (T1, T2))
        return conn("addc", conn("scale", ip, param=Fraction(1, 2)), param=Fraction(1, 2))
    if isinstance(phi, Quant):
        if _wide_sort(phi.var.sort):
            raise LogicError("quantifiers over the wide sort are outside the rescaling lemma")
        return Quant(phi.kind, phi.var, _rescale(phi.body, sig))
    if isinstance(phi, Conn):
        children = []
        for c in phi.args:
            Ic = interval_of(c)
            if Ic.lo == Ic.hi:
                children.append(Num(Ic.lo))
                continue
            psi_c = _rescale(c, sig)
            children.append(conn("addc", conn("scale", psi_c, param=Ic.hi - Ic.lo), param=Ic.lo))
        body = Conn(phi.op, tuple(children), phi.param)
    else:
        body = phi
    return conn("addc", conn("scale", body, param=1 / (b - a)), param=-a / (b - a))


def _ms_bound(sort) -> Fraction:
    return sort.bound / 4


def _sig_of(sig):
    if sig is None:
        raise LogicError("rescaling atoms over the wide sort needs the target signature")
    return sig


def _ball_ip(sig):
    return _sig_of(sig).predicate("ip")


# --------------------------------------------------------------------------
# evaluation


def _internal_env(S, phi_vars, env):
    env = dict(env or {})
    out = {}
    for v in phi_vars:
        if v.name not in env:
            raise LogicError(f"assignment missing variable {v.name}")
        out[v.name] = S.to_internal(v.sort, env[v.name])
    return out


def eval_term(S, t, env=None):
    """Value of a term; ``env`` maps variable names to points (user form)."""
    e = _internal_env(S, term_vars(t), env)
    return _Evaluator(S, QuantBudget()).term(t, e)


def eval_formula(S, phi, env=None, budget: QuantBudget | None = None) -> Enclosure:
    """Enclosure of phi at a single assignment."""
    budget = budget or QuantBudget()
    e = _internal_env(S, formula_free_vars(phi), env)
    ev = _Evaluator(S, budget)
    lo, hi, mode = ev.formula(phi, e, ())
    return Enclosure(float(np.asarray(lo).reshape(-1)[0]), float(np.asarray(hi).reshape(-1)[0]), mode)


def eval_formula_batch(S, phi, env: Mapping[str, np.ndarray], batch_shape: tuple, budget: QuantBudget | None = None):
    """Vectorized evaluation over arrays of internal points.

    Every free variable must be in ``env`` with shape ``(*batch_shape,
    *point_shape)`` (size-1 axes broadcast). Returns ``(lo, hi, mode)`` with
    ``lo``/``hi`` of shape ``batch_shape``.
    """
    budget = budget or QuantBudget()
    missing = [v.name for v in formula_free_vars(phi) if v.name not in env]
    if missing:
        raise LogicError(f"assignment missing variable(s) {', '.join(missing)}")
    ev = _Evaluator(S, budget)
    lo, hi, mode = ev.formula(phi, dict(env), tuple(batch_shape))
    return np.broadcast_to(lo, batch_shape), np.broadcast_to(hi, batch_shape), mode


def eval_exact_batch(S, phi, env, batch_shape=None):
    """Quantifier-free values (no enclosure bookkeeping)."""
    if batch_shape is None:
        batch_shape = np.broadcast_shapes(*(np.shape(v)[: np.ndim(v) - _pdim(S, k, phi)] for k, v in env.items()))
    lo, _, _ = eval_formula_batch(S, phi, env, batch_shape)
    return lo


def _pdim(S, name, phi):
    for v in formula_free_vars(phi):
        if v.name == name:
            return len(S.point_shape(v.sort))
    return 0


class _Evaluator:
    def __init__(self, S, budget: QuantBudget):
        self.S = S
        self.budget = budget
        self.rng = np.random.default_rng(budget.seed)

    # -- terms
    def term(self, t, env):
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise LogicError(f"assignment missing variable {t.name}") from None
        if isinstance(t, Const):
            return self.S.const(t.name)
        return self.S.fn(t.fn, [self.term(a, env) for a in t.args])

    # -- formulas: return (lo, hi, mode) with arrays broadcastable to batch
    def formula(self, phi, env, batch):
        S = self.S
        if isinstance(phi, Dist):
            if phi.left == phi.right:
                return 0.0, 0.0, EXACT
            v = S.dist(phi.left.out_sort, self.term(phi.left, env), self.term(phi.right, env))
            return v, v, EXACT
        if isinstance(phi, Pred):
            v = S.pred(phi.symbol, [self.term(a, env) for a in phi.args])
            return v, v, EXACT
        if isinstance(phi, Num):
            v = float(phi.value)
            return v, v, EXACT
        if isinstance(phi, BlackBox):
            v = np.asarray(phi.fn({w.name: env[w.name] for w in phi.free}), dtype=float)
            lo, hi = float(phi.interval.lo), float(phi.interval.hi)
            v = np.clip(v, lo, hi)
            return v, v, EXACT
        if isinstance(phi, Quant):
            return self.block(phi, env, batch)
        return self.connective(phi, env, batch)

    def connective(self, phi, env, batch):
        op, q = phi.op, phi.param
        lo1, hi1, m1 = self.formula(phi.args[0], env, batch)
        lo1, hi1 = np.asarray(lo1, dtype=float), np.asarray(hi1, dtype=float)
        if op == "neg":
            I = interval_of(phi.args[0])
            s = float(I.lo + I.hi)
            return s - hi1, s - lo1, m1
        if op == "sub":
            r = float(q)
            return np.maximum(lo1 - r, 0.0), np.maximum(hi1 - r, 0.0), m1
        if op == "scale":
            c = float(q)
            a, b = c * lo1, c * hi1
            return (a, b, m1) if c >= 0 else (b, a, m1)
        if op == "addc":
            c = float(q)
            return lo1 + c, hi1 + c, m1
        lo2, hi2, m2 = self.formula(phi.args[1], env, batch)
        lo2, hi2 = np.asarray(lo2, dtype=float), np.asarray(hi2, dtype=float)
        mode = worst_mode(m1, m2)
        if op == "min":
            return np.minimum(lo1, lo2), np.minimum(hi1, hi2), mode
        if op == "max":
            return np.maximum(lo1, lo2), np.maximum(hi1, hi2), mode
        if op == "absdiff":
            lo = np.maximum(np.maximum(lo1 - hi2, lo2 - hi1), 0.0)
            hi = np.maximum(hi1 - lo2, hi2 - lo1)
            return lo, hi, mode
        if op == "csum":
            H = interval_of(phi.args[0]).hull(interval_of(phi.args[1]))
            a, b = float(H.lo), float(H.hi)
            return np.clip(lo1 + lo2, a, b), np.clip(hi1 + hi2, a, b), mode
        raise LogicError(f"unknown connective {op}")

    # -- quantifier blocks
    def block(self, phi, env, batch):
        kind = phi.kind
        vars_, body = [], phi
        while isinstance(body, Quant) and body.kind == kind and body.var.name not in {v.name for v in vars_}:
            vars_.append(body.var)
            body = body.body
        S, B = self.S, self.budget
        lip = lipschitz_of(body)
        I = interval_of(phi)
        ilo, ihi = float(I.lo), float(I.hi)
        relevant = [v for v in vars_ if lip[v.name] > 0]
        if not relevant:
            # the body does not depend on the bound variables
            inner = dict(env)
            for v in vars_:
                inner[v.name] = self._anchor(v, batch)
            return self.formula(body, inner, batch)
        batch_size = int(np.prod(batch)) if batch else 1
        finite = [S.is_finite for _ in vars_]
        if all(finite):
            sizes = [S.size(v.sort) for v in vars_]
            K = int(np.prod(sizes))
            if K * batch_size <= B.max_points:
                pts = self._product([np.arange(s, dtype=np.int64) for s in sizes])
                lo, hi, m = self._eval_block(body, env, batch, vars_, pts, K)
                return self._reduce(kind, lo, hi, m, ilo, ihi)
        elif not any(finite):
            dim = sum(S.real_dim(v.sort) for v in vars_)
            if dim <= B.max_dim:
                sizes = [S.net_size(v.sort, B.delta) for v in vars_]
                K = int(np.prod(sizes, dtype=float))
                if K <= B.max_net and K * batch_size <= B.max_points:
                    pts = self._product([S.net(v.sort, B.delta) for v in vars_])
                    K = len(pts[0])
                    lo, hi, m = self._eval_block(body, env, batch, vars_, pts, K)
                    widen = sum(lip[v.name] * B.delta for v in vars_)
                    lo, hi, m = self._reduce(kind, lo, hi, m, ilo, ihi)
                    if kind == "sup":
                        hi = np.minimum(hi + widen, ihi)
                    else:
                        lo = np.maximum(lo - widen, ilo)
                    return lo, hi, worst_mode(m, CERTIFIED)
        return self._sampled(kind, body, env, batch, vars_, ilo, ihi)

    def _anchor(self, v, batch):
        S = self.S
        if S.is_finite:
            return np.zeros((1,) * len(batch), dtype=np.int64)
        pt = S.special_points(v.sort)[0]
        return pt.reshape((1,) * len(batch) + pt.shape)

    @staticmethod
    def _product(axes):
        """All tuples from per-variable point lists, flattened along one axis."""
        idx = np.indices([len(a) for a in axes]).reshape(len(axes), -1)
        return [np.asarray(a)[i] for a, i in zip(axes, idx)]

    def _eval_block(self, body, env, batch, vars_, pts, K, per_batch=False):
        """Evaluate body with the block's tuples on a new trailing batch axis.

        ``pts[i]`` has shape ``(K, *pshape)`` or, with ``per_batch``,
        ``(*batch, K, *pshape)``.
        """
        nb = len(batch)
        inner = {}
        for name, arr in env.items():
            arr = np.asarray(arr)
            if arr.ndim < nb:
                raise LogicError(f"value of {name} lacks batch axes")
            inner[name] = np.expand_dims(arr, axis=nb)
        for v, p in zip(vars_, pts):
            p = np.asarray(p)
            if not per_batch:
                p = p.reshape((1,) * nb + p.shape)
            inner[v.name] = p
        new_batch = tuple(batch) + (K,)
        lo, hi, m = self.formula(body, inner, new_batch)
        return np.broadcast_to(lo, new_batch), np.broadcast_to(hi, new_batch), m

    @staticmethod
    def _reduce(kind, lo, hi, m, ilo, ihi):
        if kind == "sup":
            lo, hi = lo.max(axis=-1), hi.max(axis=-1)
        else:
            lo, hi = lo.min(axis=-1), hi.min(axis=-1)
        return np.clip(lo, ilo, ihi), np.clip(hi, ilo, ihi), m

    # -- sampled search
    def _sampled(self, kind, body, env, batch, vars_, ilo, ihi):
        S, B, rng = self.S, self.budget, self.rng
        sign = 1.0 if kind == "sup" else -1.0
        nb = len(batch)
        cands = self._candidates(vars_, batch)
        lo, hi, _ = self._eval_block(body, env, batch, vars_, cands, len(cands[0]))
        full = [self._full(c, batch) for c in cands]
        extra = self._term_candidates(body, env, batch, vars_)
        if extra is not None:
            tlo, thi, _ = self._eval_block(body, env, batch, vars_, extra, extra[0].shape[nb], per_batch=True)
            lo, hi = np.concatenate([lo, tlo], axis=-1), np.concatenate([hi, thi], axis=-1)
            full = [np.concatenate([f, t], axis=nb) for f, t in zip(full, extra)]
        score = sign * (lo if kind == "sup" else hi)
        nstart = min(B.refine_starts, score.shape[-1])
        order = np.argsort(-score, axis=-1, kind="stable")[..., :nstart]
        best = [np.take_along_axis(f, self._idx(order, f, batch), axis=nb) for f in full]
        best_score = np.take_along_axis(score, order, axis=-1)
        cont = [not S.is_finite for _ in vars_]
        if any(cont) and B.refine_rounds > 0:
            radii = [S.radius(v.sort) for v in vars_]
            P = B.refine_proposals
            step0, step1 = 0.5, 1e-8
            target = ihi if kind == "sup" else -ilo
            rounds = B.refine_rounds if not batch else min(B.refine_rounds, B.nested_refine_rounds)
            for r in range(rounds):
                if np.all(best_score.max(axis=-1) >= target):
                    break  # every batch element already attains the interval bound
                step = step0 * (step1 / step0) ** (r / max(rounds - 1, 1))
                props = []
                for v, b, c, rad in zip(vars_, best, cont, radii):
                    bb = np.repeat(b, P, axis=len(batch))
                    if c:
                        noise = rng.standard_normal(bb.shape)
                        if np.iscomplexobj(bb):
                            noise = noise + 1j * rng.standard_normal(bb.shape)
                        bb = S.project(v.sort, bb + step * rad * noise)
                    props.append(bb)
                Kp = nstart * P
                plo, phi_, _ = self._eval_block(body, env, batch, vars_, props, Kp, per_batch=True)
                ps = sign * (plo if kind == "sup" else phi_)
                ps = ps.reshape(tuple(batch) + (nstart, P))
                j = ps.argmax(axis=-1)
                cand_score = np.take_along_axis(ps, j[..., None], axis=-1)[..., 0]
                better = cand_score > best_score
                if not better.any():
                    continue
                flat = np.arange(nstart) * P
                pick = (flat.reshape((1,) * len(batch) + (nstart,)) + j)
                for i in range(len(best)):
                    chosen = np.take_along_axis(props[i], self._idx(pick, props[i], batch), axis=len(batch))
                    mask = better.reshape(better.shape + (1,) * (chosen.ndim - better.ndim))
                    best[i] = np.where(mask, chosen, best[i])
                best_score = np.where(better, cand_score, best_score)
        val = sign * best_score.max(axis=-1)
        val = np.clip(val, ilo, ihi)
        return val, val, SAMPLED

    @staticmethod
    def _full(c, batch):
        """Shared candidates (K, *pshape) broadcast to (*batch, K, *pshape)."""
        c = np.asarray(c)
        return np.broadcast_to(c.reshape((1,) * len(batch) + c.shape), tuple(batch) + c.shape)

    @staticmethod
    def _idx(order, full, batch):
        return order.reshape(order.shape + (1,) * (full.ndim - len(batch) - 1))

    def _term_candidates(self, body, env, batch, vars_, per_var=16, max_tuples=256):
        """Values of body subterms that avoid the block variables.

        Witnesses of the form ``y = t(x)`` are exactly what an inf over y
        tends to need, and random search rarely lands on them.
        """
        block = {v.name for v in vars_}
        nb = len(batch)
        lists = []
        for v in vars_:
            found = {}
            for t in atoms_terms(body):
                for s in subterms(t):
                    if s.out_sort != v.sort or s in found or len(found) >= per_var:
                        continue
                    names = {w.name for w in term_vars(s)}
                    if not names or names & block or not names <= set(env):
                        continue
                    val = np.asarray(self.term(s, env))
                    pshape = self.S.point_shape(v.sort)
                    found[s] = np.broadcast_to(val, tuple(batch) + tuple(pshape))
            lists.append(list(found.values()))
        if not any(lists):
            return None
        for i, (v, lst) in enumerate(zip(vars_, lists)):
            if not lst:
                anchor = self._anchor(v, batch)
                lists[i] = [np.broadcast_to(anchor, tuple(batch) + anchor.shape[nb:])]
        if int(np.prod([len(lst) for lst in lists])) > max_tuples:
            return None
        idx = np.indices([len(lst) for lst in lists]).reshape(len(lists), -1)
        return [np.stack([lst[j] for j in row], axis=nb) for lst, row in zip(lists, idx)]

    def _candidates(self, vars_, batch):
        S, B, rng = self.S, self.budget, self.rng
        specials = [np.asarray(S.special_points(v.sort)) for v in vars_]
        specials = [s if len(s) else S.sample(v.sort, 1, rng) for s, v in zip(specials, vars_)]
        batch_size = int(np.prod(batch)) if batch else 1
        n_special = int(np.prod([len(s) for s in specials], dtype=float))
        cap = max(B.special_tuples // batch_size, 1)
        if n_special <= cap:
            spec = self._product(specials)
        else:
            m = min(cap, B.samples)
            spec = [s[rng.integers(0, len(s), size=m)] for s in specials]
        rand = [S.sample(v.sort, B.samples, rng) for v in vars_]
        return [np.concatenate([a, b]) for a, b in zip(spec, rand)]
