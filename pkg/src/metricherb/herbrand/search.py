"""Search for Herbrand witness terms.

Both searches reduce to the same set cover: every candidate witness tuple
covers the checked points x where phi(x, t(x)) is small enough, and
``greedy_cover`` picks tuples until the points that need a witness are all
covered. The classical search checks the whole finite universe; the
continuous search checks seeded samples and says so in the certificate.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from ..logic.parser import format_formula, format_term
from ..logic.semantics import DEFAULT_TOL, QuantBudget, _Evaluator, eval_formula_batch
from ..logic.syntax import (
    EXACT,
    SAMPLED,
    BlackBox,
    Interval,
    LogicError,
    Var,
    formula_free_vars,
    inf_all,
    term_size,
)
from ..models.base import ModelError
from ..models.modelfile import describe
from ..normalizer import AffineNormalForm, Monomial, enumerate_terms, evaluate, normalize_term, realize
from ..scalars import format_scalar, modulus, scalar
from .certificate import AlphaContradiction, AlphaEnvelope, CoverNotFound, HerbrandCertificate, WitnessTerm

UNCOVERED_REPORT = 20


class FunctionLeavesBall(ModelError):
    def __init__(self, message: str, witness, norm: float):
        super().__init__(message)
        self.witness = witness
        self.norm = norm


# --------------------------------------------------------------------------
# set cover


def greedy_cover(covers: np.ndarray, residuals: np.ndarray, need: np.ndarray, keys: Sequence[tuple] = (),
                 k_max: int | None = None, polish: bool = True):
    """Greedy cover of the ``need`` columns by rows of ``covers``.

    Each step takes the row covering most uncovered needed columns. Ties go
    to the smaller worst residual on the newly covered columns, then to
    ``keys[row]``, then to the row index. With ``polish`` each chosen row is
    afterwards swapped for any row that keeps the cover and strictly lowers
    the worst residual. Returns ``(chosen_rows, uncovered_mask)``.
    """
    covers = np.asarray(covers, dtype=bool)
    residuals = np.asarray(residuals, dtype=float)
    C = covers.shape[0]
    keys = list(keys) if keys else [()] * C
    left = np.asarray(need, dtype=bool).copy()
    chosen: list[int] = []
    while left.any():
        if k_max is not None and len(chosen) >= k_max:
            break
        fresh = covers & left
        gain = fresh.sum(axis=1)
        g = int(gain.max()) if C else 0
        if g == 0:
            break
        tied = np.flatnonzero(gain == g)
        worst = np.where(fresh[tied], residuals[tied], -np.inf).max(axis=1)
        best = min(range(len(tied)), key=lambda j: (worst[j], keys[tied[j]], int(tied[j])))
        r = int(tied[best])
        chosen.append(r)
        left &= ~covers[r]
    if polish and chosen and not left.any():
        chosen = _polish(covers, residuals, np.asarray(need, dtype=bool), chosen)
    return chosen, left


def _stat(residuals, need, rows) -> float:
    if not need.any():
        return 0.0
    return float(residuals[rows][:, need].min(axis=0).max())


def _polish(covers, residuals, need, chosen):
    chosen = list(chosen)
    current = _stat(residuals, need, chosen)
    for slot in range(len(chosen)):
        others = chosen[:slot] + chosen[slot + 1:]
        base_cov = covers[others].any(axis=0) if others else np.zeros(covers.shape[1], dtype=bool)
        ok = (covers | base_cov)[:, need].all(axis=1)
        if others:
            base_res = residuals[others][:, need].min(axis=0)
            stats = np.minimum(residuals[:, need], base_res).max(axis=1)
        else:
            stats = residuals[:, need].max(axis=1)
        stats = np.where(ok, stats, np.inf)
        r = int(np.argmin(stats))
        if stats[r] < current:
            chosen[slot] = r
            current = float(stats[r])
    return chosen


# --------------------------------------------------------------------------
# helpers


def _split_vars(phi, x_vars, y_vars, default=None):
    free = formula_free_vars(phi) if not isinstance(phi, BlackBox) else phi.free
    by_name = {v.name: v for v in free}
    default = default or (free[0].sort if free else None)

    def pick(names):
        out = []
        for n in names:
            if isinstance(n, Var):
                out.append(n)
            elif n in by_name:
                out.append(by_name[n])
            else:
                out.append(Var(n, default))  # allowed: phi need not mention every variable
        return out

    if y_vars is None:
        ys = [v for v in free if v.name.startswith("y")]
    else:
        ys = pick(y_vars)
    if x_vars is None:
        xs = [v for v in free if v not in ys]
    else:
        xs = pick(x_vars)
    if not ys:
        raise LogicError("no witness variables: name them with y_vars or use names starting with 'y'")
    stray = [v.name for v in free if v not in xs and v not in ys]
    if stray:
        raise LogicError(f"free variables neither x nor y: {stray}")
    return xs, ys


def _formula_text(phi, S, text=None):
    if text is not None:
        return text
    if isinstance(phi, BlackBox):
        return phi.name
    return format_formula(phi, S.sig)


def _theory(S):
    return getattr(S, "theory", None)


def _universe_env(S, xs, cap):
    sizes = [S.size(v.sort) for v in xs]
    total = int(np.prod(sizes)) if sizes else 1
    if total > cap:
        raise CoverNotFound(f"universe has {total} x-tuples, above the exhaustive cap {cap}", [])
    idx = np.indices(sizes).reshape(len(sizes), -1) if sizes else np.zeros((0, 1), dtype=np.int64)
    return {v.name: idx[i] for i, v in enumerate(xs)}, total


def _external(S, xs, env, i):
    return {v.name: _jsonable(S.to_external(v.sort, env[v.name][i])) for v in xs}


def _jsonable(x):
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return [format_scalar(scalar(complex(z))) for z in x.ravel()]
        return [float(z) for z in x.ravel()]
    if isinstance(x, tuple):
        return ".".join(str(p) for p in x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


# --------------------------------------------------------------------------
# classical search


def search_classical(S, phi, depth: int = 1, x_vars=None, y_vars=None, tol: float = DEFAULT_TOL,
                     max_candidates: int = 200_000, k_max: int | None = None, seed: int = 0,
                     exhaustive_cap: int = 200_000, verify: bool = True) -> HerbrandCertificate:
    """Exact witness terms on a finite structure.

    phi counts as true at a tuple when its value is at most ``tol``. Every
    x-tuple with a true y-tuple must be covered by some candidate term tuple
    (terms up to ``depth`` from ``enumerate_terms``); failures raise
    CoverNotFound listing uncovered tuples.
    """
    if not S.is_finite:
        raise ModelError("classical search needs a finite structure")
    xs, ys = _split_vars(phi, x_vars, y_vars, S.sig.default_sort)
    env_x, NX = _universe_env(S, xs, exhaustive_cap)
    env_y, NY = _universe_env(S, ys, exhaustive_cap)
    env = {k: v[:, None] for k, v in env_x.items()}
    env.update({k: v[None, :] for k, v in env_y.items()})
    budget = QuantBudget(seed=seed)
    _, hi, mode = eval_formula_batch(S, phi, env, (NX, NY), budget)
    truth = np.asarray(hi) <= tol
    need = truth.any(axis=1)

    terms = list(enumerate_terms(S.sig, xs, depth, S, seed=seed))
    ev = _Evaluator(S, budget)
    vals = [np.broadcast_to(np.asarray(ev.term(t, env_x)), (NX,)).astype(np.int64) for t in terms]
    sizes_y = [S.size(v.sort) for v in ys]
    ntuples = len(terms) ** len(ys)
    if ntuples > max_candidates:
        raise CoverNotFound(f"{ntuples} candidate tuples exceed the budget {max_candidates}", [])
    tuples = list(itertools.product(range(len(terms)), repeat=len(ys)))
    rows = np.arange(NX)
    covers = np.empty((len(tuples), NX), dtype=bool)
    for c, tup in enumerate(tuples):
        yidx = np.ravel_multi_index(tuple(vals[i] for i in tup), sizes_y) if ys else np.zeros(NX, dtype=np.int64)
        covers[c] = truth[rows, yidx]
    residuals = np.where(covers, 0.0, 1.0)
    keys = [(sum(term_size(terms[i]) for i in tup),) for tup in tuples]
    chosen, left = greedy_cover(covers, residuals, need, keys, k_max=k_max, polish=False)

    witness = [WitnessTerm(tuple(format_term(terms[i]) for i in tuples[c])) for c in chosen]
    cert = HerbrandCertificate(
        formula=_formula_text(phi, S),
        x_vars=tuple(v.name for v in xs),
        y_vars=tuple(v.name for v in ys),
        epsilon=0.0,
        terms=tuple(witness),
        mode=EXACT if mode == EXACT else SAMPLED,
        max_residual=0.0,
        samples=NX,
        gated=int(need.sum()),
        seed=seed,
        model=describe(S),
        flags=("vacuous",) if not need.any() else (),
        extra={"depth": depth, "candidates": len(tuples), "tolerance": tol},
    )
    if left.any():
        bad = [_external(S, xs, env_x, i) for i in np.flatnonzero(left)[:UNCOVERED_REPORT]]
        raise CoverNotFound(f"{int(left.sum())} x-tuples have no witness among terms of depth <= {depth}", bad, cert)
    if verify and cert.mode == EXACT:
        from .verify import verify_certificate

        report = verify_certificate(cert)
        if not report.ok:
            raise RuntimeError(f"independent verification disagrees: {report.message}")
    return cert


# --------------------------------------------------------------------------
# continuous search


def _as_tuple(c, ny):
    if isinstance(c, (tuple, list)):
        if len(c) != ny:
            raise LogicError(f"candidate has {len(c)} components for {ny} witness variables")
        return tuple(c)
    if ny != 1:
        raise LogicError("bare candidates need exactly one witness variable")
    return (c,)


def _serial(item) -> str:
    if isinstance(item, AffineNormalForm):
        return json.dumps(item.to_json(), sort_keys=True)
    return format_term(item)


def _weight(item) -> float:
    if isinstance(item, AffineNormalForm):
        return item.l1_mass()
    return float(term_size(item))


def _values(S, item, env_x, N, pshape, ev):
    if isinstance(item, AffineNormalForm):
        v = evaluate(item, S, env_x)
    else:
        v = ev.term(item, env_x)
    return np.broadcast_to(np.asarray(v), (N,) + tuple(pshape))


def _witness(S, tup, theory):
    texts, nfs = [], []
    for item in tup:
        if isinstance(item, AffineNormalForm):
            texts.append(format_term(realize(item, S.sig)))
            nfs.append(item.to_json())
        else:
            texts.append(format_term(item))
            try:
                nfs.append(normalize_term(item, theory, getattr(S, "group", None)).to_json() if theory else None)
            except LogicError:
                nfs.append(None)
    return WitnessTerm(tuple(texts), None if any(n is None for n in nfs) else tuple(nfs))


def sample_points(S, xs, samples: int, seed: int, include_special: bool = True, exhaustive_cap: int = 100_000):
    """Seeded x-samples: the whole universe when finite and small, else special points then random ones."""
    if S.is_finite:
        sizes = [S.size(v.sort) for v in xs]
        if int(np.prod(sizes)) <= exhaustive_cap:
            env, N = _universe_env(S, xs, exhaustive_cap)
            return env, N, True
    rng = np.random.default_rng(seed)
    env = {}
    specials = [np.asarray(S.special_points(v.sort)) for v in xs] if include_special else []
    k = max((len(s) for s in specials), default=0)
    for i, v in enumerate(xs):
        parts = []
        if k:
            sp = specials[i]
            parts.append(sp[np.arange(k) % len(sp)])
        parts.append(S.sample(v.sort, samples, rng))
        env[v.name] = np.concatenate(parts)
    return env, samples + k, False


def search_continuous(S, phi, eps: float, candidates: Sequence, x_vars=None, y_vars=None,
                      delta_gate: float | None = None, samples: int = 512, seed: int = 0, workers: int = 1,
                      budget: QuantBudget | None = None, k_max: int | None = None, gate_values=None,
                      alpha: bool = False, formula_text: str | None = None, target: str | None = None,
                      include_special: bool = True, extra: Mapping | None = None) -> HerbrandCertificate:
    """Approximate witness terms, checked on seeded samples.

    A sample x is admitted when the upper end of the enclosure of
    inf_y phi(x, y) is at most ``delta_gate`` (default eps/3); candidates
    (tuples of normal forms or terms, one per witness variable) are then
    chosen greedily to bring every admitted sample to phi <= eps.
    ``gate_values`` replaces the gate evaluation when inf_y phi is known.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not candidates:
        raise ValueError("empty candidate family")
    delta = eps / 3 if delta_gate is None else float(delta_gate)
    budget = budget or QuantBudget(seed=seed)
    xs, ys = _split_vars(phi, x_vars, y_vars, S.sig.default_sort)
    cands = [_as_tuple(c, len(ys)) for c in candidates]
    env_x, N, exhaustive = sample_points(S, xs, samples, seed, include_special)

    if gate_values is None:
        glo, ghi, gmode = eval_formula_batch(S, inf_all(ys, phi), env_x, (N,), replace(budget, seed=seed))
        gate = np.asarray(ghi, dtype=float)
    else:
        gate = np.broadcast_to(np.asarray(gate_values, dtype=float), (N,)).copy()
        gmode = EXACT
    admitted = gate <= delta

    ev = _Evaluator(S, budget)
    pshapes = [S.point_shape(v.sort) for v in ys]

    def score(i):
        env = dict(env_x)
        for v, item, ps in zip(ys, cands[i], pshapes):
            env[v.name] = _values(S, item, env_x, N, ps, ev)
        _, hi, m = eval_formula_batch(S, phi, env, (N,), replace(budget, seed=seed + 7919 * (i + 1)))
        return np.asarray(hi, dtype=float), m

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(score, range(len(cands))))
    else:
        scored = [score(i) for i in range(len(cands))]
    R = np.stack([s[0] for s in scored])
    modes = {s[1] for s in scored} | {gmode}
    covers = R <= eps
    keys = [(sum(_weight(it) for it in tup), "|".join(_serial(it) for it in tup)) for tup in cands]
    chosen, left = greedy_cover(covers, R, admitted, keys, k_max=k_max)

    theory = _theory(S)
    exact = exhaustive and modes == {EXACT}
    flags = []
    if not admitted.any():
        flags.append("vacuous")
    resid = _stat(R, admitted, chosen) if chosen and not left.any() else float("inf") if admitted.any() else 0.0
    stats_extra = {"candidates": len(cands), "workers_independent": True}
    stats_extra.update(extra or {})
    cert = HerbrandCertificate(
        formula=_formula_text(phi, S, formula_text),
        x_vars=tuple(v.name for v in xs),
        y_vars=tuple(v.name for v in ys),
        epsilon=float(eps),
        terms=tuple(_witness(S, cands[c], theory) for c in chosen),
        mode=EXACT if exact else SAMPLED,
        max_residual=resid,
        samples=N,
        gated=int(admitted.sum()),
        seed=seed,
        model=describe(S),
        delta_gate=delta,
        target=target,
        theory=theory,
        flags=tuple(flags),
        extra=stats_extra,
    )
    if left.any():
        bad = [_external(S, xs, env_x, i) for i in np.flatnonzero(left)[:UNCOVERED_REPORT]]
        raise CoverNotFound(f"{int(left.sum())} admitted samples remain uncovered at eps={eps}", bad, cert)
    if alpha:
        s = np.clip(gate, 0.0, 1.0)
        best = R[chosen].min(axis=0) if chosen else np.full(N, float(phi_hi(phi)))
        a = np.clip(best - eps, 0.0, 1.0)
        cert = cert.with_alpha(fit_alpha(list(zip(s.tolist(), a.tolist())), exact=exact))
    return cert


def phi_hi(phi) -> float:
    from ..logic.semantics import interval_of

    return float(interval_of(phi).hi)


# --------------------------------------------------------------------------
# alpha envelope


def fit_alpha(pairs: Sequence[tuple[float, float]], exact: bool = False, tol: float = 1e-12) -> AlphaEnvelope:
    """Smallest nondecreasing piecewise-linear alpha with alpha(0) = 0 above all pairs at their abscissae.

    ``pairs`` are (inf_y phi, min_i phi - eps truncated at 0). A pair (0, a)
    with a > 0 cannot be dominated; in exact mode it raises
    AlphaContradiction, otherwise it is kept in ``violations``.
    """
    pairs = [(float(s), float(a)) for s, a in pairs]
    if not pairs:
        raise ValueError("fit_alpha needs at least one pair")
    if any(not 0.0 <= s <= 1.0 for s, _ in pairs):
        raise ValueError("first coordinates must lie in [0, 1]")
    bad = tuple(sorted((s, a) for s, a in pairs if s <= tol and a > tol))
    if bad and exact:
        raise AlphaContradiction(f"{len(bad)} pairs have inf 0 but residual above eps; the certificate is falsified", bad)
    pts = sorted((s, max(a, 0.0)) for s, a in pairs if s > tol)
    knots = [(0.0, 0.0)]
    for s, a in pts:
        top = max(a, knots[-1][1])
        if s == knots[-1][0]:
            knots[-1] = (s, top)
        else:
            knots.append((s, top))
    # drop knots that sit on the segment between their neighbours
    slim = [knots[0]]
    for i in range(1, len(knots) - 1):
        (s0, a0), (s1, a1), (s2, a2) = slim[-1], knots[i], knots[i + 1]
        if abs((a1 - a0) * (s2 - s0) - (a2 - a0) * (s1 - s0)) > 1e-15:
            slim.append(knots[i])
    if len(knots) > 1:
        slim.append(knots[-1])
    return AlphaEnvelope(tuple(slim), bad)


# --------------------------------------------------------------------------
# definable functions on the Hilbert ball


def lambda_grid(mesh, field: str = "R") -> list:
    """Scalars of modulus <= 1 on a grid of spacing ``mesh`` (exact rationals)."""
    h = Fraction(mesh).limit_denominator(10**6) if not isinstance(mesh, Fraction) else mesh
    if h <= 0:
        raise ValueError("mesh must be positive")
    m = int(1 / h)
    reals = [j * h for j in range(-m, m + 1)]
    if field == "R":
        return reals
    return [scalar(complex(float(a), float(b))) if b else a for a in reals for b in reals
            if float(a) ** 2 + float(b) ** 2 <= 1 + 1e-12]


def candidate_family(S, lambdas: Sequence, x_var: str = "x", constants: Sequence[str] | None = None,
                     const_coeffs: Sequence | None = None) -> list[AffineNormalForm]:
    """Normal forms lam*x + mu*c with |lam| + |mu| <= 1 (c a named constant, possibly absent)."""
    theory = _theory(S) or "hilbert"
    if constants is None:
        constants = [c for c in sorted(S.sig.constants) if c != "0"]
    lam = [scalar(v) for v in lambdas]
    mus = [scalar(v) for v in (const_coeffs if const_coeffs is not None else lambdas)]
    out = []
    seen = set()
    for a in lam:
        base = {Monomial(False, x_var, ()): a} if a != 0 else {}
        forms = [base]
        for c in constants:
            for mu in mus:
                if mu != 0 and modulus(a) + modulus(mu) <= 1 + 1e-12:
                    forms.append({**base, Monomial(True, c, ()): mu})
        for coeffs in forms:
            nf = AffineNormalForm(theory, coeffs)
            if nf not in seen:
                seen.add(nf)
                out.append(nf)
    return out


def image_centers(S, f: Callable, k: int, samples: int = 512, seed: int = 0, iters: int = 20, prefix: str = "w"):
    """k Lloyd centres of sampled images f(x); returns (structure with constants, names)."""
    rng = np.random.default_rng(seed)
    pts = np.asarray(f(S.sample(S.sig.default_sort, samples, rng)))
    k = min(k, len(pts))
    centres = pts[rng.choice(len(pts), size=k, replace=False)]
    for _ in range(iters):
        lab = np.argmin(np.linalg.norm(pts[:, None, :] - centres[None], axis=-1), axis=1)
        for j in range(k):
            if (lab == j).any():
                centres[j] = pts[lab == j].mean(axis=0)
    names = [f"{prefix}{j + 1}" for j in range(k)]
    return S.with_constants(dict(zip(names, centres))), names


def cover_definable_function(S, f, eps: float, candidates: Sequence | None = None, samples: int = 512,
                             seed: int = 0, workers: int = 1, mesh: float | None = None, centres: int = 0,
                             k_max: int | None = None, alpha: bool = False, ball_tol: float = 1e-9,
                             name: str | None = None, target: str | None = None) -> HerbrandCertificate:
    """Piecewise-affine cover of a function of one ball variable.

    ``f`` is a vectorized callable on internal points ``(..., n) -> (..., n)``,
    a term in x, or the name of a registered target. The gate is exact: when
    f maps into the ball, inf_y d(f(x), y) = 0 at every x. Without explicit
    candidates the family is lam*x + mu*c over a grid of spacing ``mesh``
    (default eps/2), with constants the named ones plus ``centres`` cluster
    centres of sampled images.
    """
    from .targets import TARGETS

    if eps <= 0:
        raise ValueError("eps must be positive")
    sort = S.sig.default_sort
    x, y = Var("x", sort), Var("y", sort)
    if isinstance(f, str):
        target = f
        name = name or f"d(y, {f}(x))"
        f = TARGETS[f].fn
    elif not callable(f):
        term = f
        name = name or f"d(y, {format_term(term)})"
        ev = _Evaluator(S, QuantBudget(seed=seed))
        f = lambda X, term=term, ev=ev: np.asarray(ev.term(term, {"x": X}))  # noqa: E731

    rng = np.random.default_rng(seed + 1)
    probe = np.concatenate([np.asarray(S.special_points(sort)), S.sample(sort, samples, rng)])
    img = np.broadcast_to(np.asarray(f(probe)), probe.shape)
    norms = np.linalg.norm(img, axis=-1)
    if (norms > 1 + ball_tol).any():
        i = int(np.argmax(norms))
        raise FunctionLeavesBall(f"f leaves the unit ball: |f(a)| = {norms[i]:.6g}", _jsonable(probe[i]), float(norms[i]))

    if candidates is None:
        mesh = eps / 2 if mesh is None else mesh
        lam = lambda_grid(mesh, S.field)
        consts = None
        if centres:
            S, consts = image_centers(S, f, centres, seed=seed)
            consts = [c for c in sorted(S.sig.constants) if c != "0"]
        candidates = candidate_family(S, lam, "x", consts)

    def dist(env):
        fx = np.asarray(f(env["x"]))
        return np.linalg.norm(np.broadcast_to(env["y"], np.broadcast_shapes(np.shape(env["y"]), fx.shape)) - fx, axis=-1)

    phi = BlackBox(name or "d(y, f(x))", dist, (x, y), Interval(Fraction(0), Fraction(2)), (math.inf, 1.0))
    return search_continuous(S, phi, eps, candidates, ["x"], ["y"], samples=samples, seed=seed, workers=workers,
                             k_max=k_max, gate_values=0.0, alpha=alpha, target=target,
                             extra={"gate": "exact: f maps into the ball"})
