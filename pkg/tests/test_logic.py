import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gen import ball_points, random_formula, random_term
from metricherb.logic import (
    App,
    Conn,
    Const,
    DegenerateIntervalWarning,
    Dist,
    Interval,
    Num,
    ParseError,
    Pred,
    Quant,
    QuantBudget,
    SortError,
    UnknownSymbolError,
    Var,
    eval_formula,
    eval_formula_batch,
    eval_term,
    format_formula,
    format_term,
    interval_of,
    lipschitz_of,
    parse_formula,
    parse_term,
    rescale_to_unit,
    rescale_with_flag,
)
from metricherb.models import build_hilbert, expand_unitary, kpartite
from metricherb.scalars import format_scalar, parse_scalar


@pytest.fixture(scope="module")
def H():
    return build_hilbert(4, constants={"v0": [0.5, 0, 0, 0]})


# -------------------------------------------------------------------- parsing


def test_parse_affine_application(H):
    t = parse_term("f[0.5,0.5](x, v0)", H.sig)
    assert isinstance(t, App) and t.fn.name == "f"
    assert t.fn.params == (Fraction(1, 2), Fraction(1, 2))
    assert isinstance(t.args[0], Var) and t.args[0].name == "x"
    assert isinstance(t.args[1], Const) and t.args[1].name == "v0"


def test_parse_variable(H):
    assert parse_term("x", H.sig) == Var("x", H.sig.default_sort)


def test_parse_nested_unitary():
    U = expand_unitary(build_hilbert(2, "C"), (1j, -1j))
    t = parse_term("U(U(x))", U.sig)
    assert t.fn.name == "U" and t.args[0].fn.name == "U"
    assert isinstance(t.args[0].args[0], Var)


def test_parse_formulas(H):
    assert isinstance(parse_formula("d(x, 0)", H.sig), Dist)
    q = parse_formula("sup x . ip(x,x)", H.sig)
    assert isinstance(q, Quant) and q.kind == "sup" and isinstance(q.body, Pred)
    c = parse_formula("min(d(x,y), sub(ip(x,y), 0.25))", H.sig)
    assert isinstance(c, Conn) and c.op == "min"
    assert c.args[1].op == "sub" and c.args[1].param == Fraction(1, 4)


def test_whitespace_insensitive(H):
    a = parse_formula("min(d(x,y),sub(ip(x,y),0.25))", H.sig)
    b = parse_formula("  min ( d( x , y ) , sub(ip(x, y) , 0.25 ) ) ", H.sig)
    assert a == b


@pytest.mark.parametrize("text, exc", [
    ("d(x,", ParseError),
    ("d(x, y) extra", ParseError),
    ("q(x, y)", UnknownSymbolError),
    ("d(U(x), y)", UnknownSymbolError),
    ("frob(d(x,y))", UnknownSymbolError),
])
def test_parse_errors(H, text, exc):
    with pytest.raises(exc):
        parse_formula(text, H.sig)


def test_parse_error_has_position(H):
    with pytest.raises(ParseError) as info:
        parse_formula("min(d(x,y), )", H.sig)
    assert info.value.pos is not None


def test_affine_coefficients_outside_disk_rejected(H):
    with pytest.raises(Exception, match=r"\|"):
        parse_term("f[0.6,0.5](x, y)", H.sig)


def test_sort_mismatch_rejected():
    S = build_hilbert(2, ms_bound=2)
    with pytest.raises(SortError):
        parse_formula("ip(lin[1,1](x,y), x)", S.sig)


@given(st.integers(0, 10_000))
def test_roundtrip_formula(seed):
    H = build_hilbert(4, constants={"v0": [0.5, 0, 0, 0]})
    rng = np.random.default_rng(seed)
    phi = random_formula(H, rng, 3)
    if rng.random() < 0.5:
        phi = Quant("inf", Var("y", H.sig.default_sort), phi)
    assert parse_formula(format_formula(phi), H.sig) == phi


@given(st.integers(0, 10_000))
def test_roundtrip_term(seed):
    H = build_hilbert(4, constants={"v0": [0.5, 0, 0, 0]})
    t = random_term(H, np.random.default_rng(seed), 4)
    assert parse_term(format_term(t), H.sig) == t


@given(st.fractions(min_value=-3, max_value=3, max_denominator=1000))
def test_scalar_text_roundtrip(q):
    assert parse_scalar(format_scalar(q)) == q


# -------------------------------------------------------------------- intervals


def test_interval_examples(H):
    assert interval_of(parse_formula("ip(x,y)", H.sig)) == Interval(Fraction(-1), Fraction(1))
    assert interval_of(parse_formula("d(x,y)", H.sig)) == Interval(Fraction(0), Fraction(2))
    # hull of [0,1] and [0,2]
    assert interval_of(parse_formula("min(sub(d(x,y), 1), d(x,0))", H.sig)) == Interval(Fraction(0), Fraction(2))


def test_interval_of_quantifier_is_body(H):
    body = parse_formula("ip(x,y)", H.sig)
    assert interval_of(Quant("sup", Var("x", H.sig.default_sort), body)) == interval_of(body)


def test_negation_fits_interval(H):
    phi = parse_formula("neg(ip(x,y))", H.sig)
    assert interval_of(phi) == Interval(Fraction(-1), Fraction(1))
    x = np.array([[1.0, 0, 0, 0]])
    v, _, _ = eval_formula_batch(H, phi, {"x": x, "y": x}, (1,))
    assert v[0] == pytest.approx(-1.0)


# -------------------------------------------------------------------- Lipschitz


def test_lipschitz_examples(H):
    assert lipschitz_of(parse_formula("d(x,y)", H.sig)).constants == {"x": 1.0, "y": 1.0}
    assert lipschitz_of(parse_formula("ip(x,y)", H.sig)).constants == {"x": 1.0, "y": 1.0}
    psi = parse_formula("addc(0.5, scale(0.5, ip(x,y)))", H.sig)
    assert lipschitz_of(psi).constants == {"x": 0.5, "y": 0.5}


def test_lipschitz_half_ip_difference_quotients(H):
    psi = parse_formula("addc(0.5, scale(0.5, ip(x,y)))", H.sig)
    rng = np.random.default_rng(0)
    a = {v: ball_points(rng, 2000, 4) for v in "xy"}
    b = {v: ball_points(rng, 2000, 4) for v in "xy"}
    va, _, _ = eval_formula_batch(H, psi, a, (2000,))
    vb, _, _ = eval_formula_batch(H, psi, b, (2000,))
    dist = sum(np.linalg.norm(a[v] - b[v], axis=-1) for v in "xy")
    assert (np.abs(va - vb) / dist).max() <= 0.5 + 1e-12


def test_lipschitz_drops_bound_variable(H):
    phi = parse_formula("inf y . d(x, y)", H.sig)
    assert set(lipschitz_of(phi).constants) == {"x"}


@given(st.integers(0, 10_000))
def test_interval_and_lipschitz_soundness(seed):
    H = build_hilbert(3, constants={"v0": [0, 0.5, 0]})
    rng = np.random.default_rng(seed)
    phi = random_formula(H, rng, 3)
    I, L = interval_of(phi), lipschitz_of(phi).constants
    a = {v: ball_points(rng, 64, 3) for v in "xy"}
    b = {v: ball_points(rng, 64, 3) for v in "xy"}
    va, _, _ = eval_formula_batch(H, phi, a, (64,))
    vb, _, _ = eval_formula_batch(H, phi, b, (64,))
    assert (va >= float(I.lo) - 1e-12).all() and (va <= float(I.hi) + 1e-12).all()
    bound = sum(L.get(v, 0.0) * np.linalg.norm(a[v] - b[v], axis=-1) for v in "xy")
    assert (np.abs(va - vb) <= bound + 1e-9).all()


# -------------------------------------------------------------------- rescaling


def test_rescale_inner_product(H):
    psi = rescale_to_unit(parse_formula("ip(x,y)", H.sig))
    assert format_formula(psi) == "addc(0.5, scale(0.5, ip(x, y)))"
    assert interval_of(psi) == Interval(Fraction(0), Fraction(1))


def test_rescale_identity_on_unit_interval(H):
    phi = parse_formula("sub(d(x,y), 1)", H.sig)
    assert rescale_to_unit(phi) is phi


def test_rescale_degenerate_flags():
    with pytest.warns(DegenerateIntervalWarning):
        psi = rescale_to_unit(Num(Fraction(1, 2)))
    assert psi == Num(Fraction(0))
    assert rescale_with_flag(Num(Fraction(3)))[1] is True


def test_rescale_distance_of_wide_terms():
    S = build_hilbert(3, ms_bound=2)
    phi = parse_formula("d(lin[1,-2](x,y), lin[0.5,0](x,y))", S.sig)
    psi = rescale_to_unit(phi, S.sig)
    assert interval_of(psi) == Interval(Fraction(0), Fraction(1))
    rng = np.random.default_rng(1)
    x, y = ball_points(rng, 500, 3), ball_points(rng, 500, 3)
    # |(l1-l2)/4n x + (m1-m2)/4n y| with n = 2
    want = np.linalg.norm(0.5 / 8 * x + (-2) / 8 * y, axis=-1)
    got, _, _ = eval_formula_batch(S, psi, {"x": x, "y": y}, (500,))
    assert np.abs(got - want).max() <= 1e-12


@given(st.integers(0, 10_000))
def test_rescale_matches_affine_map(seed):
    H = build_hilbert(3, constants={"v0": [0, 0.5, 0]})
    rng = np.random.default_rng(seed)
    phi = random_formula(H, rng, 3)
    psi, degenerate = rescale_with_flag(phi)
    if degenerate:
        return
    I = interval_of(phi)
    assert interval_of(psi) == Interval(Fraction(0), Fraction(1))
    env = {v: ball_points(rng, 50, 3) for v in "xy"}
    vp, _, _ = eval_formula_batch(H, phi, env, (50,))
    vs, _, _ = eval_formula_batch(H, psi, env, (50,))
    lo, hi = float(I.lo), float(I.hi)
    assert np.abs(vs - (vp - lo) / (hi - lo)).max() <= 1e-9


# -------------------------------------------------------------------- evaluation


def test_eval_term_examples():
    S = build_hilbert(8)
    e1 = np.eye(8)[0]
    assert np.allclose(eval_term(S, parse_term("f[0.5,0.5](x, 0)", S.sig), {"x": e1}), e1 / 2)
    w = np.exp(2j * np.pi * np.arange(4) / 4)
    U = expand_unitary(build_hilbert(4, "C"), tuple(w))
    for k in range(4):
        ek = np.eye(4, dtype=complex)[k]
        assert np.allclose(eval_term(U, parse_term("U(x)", U.sig), {"x": ek}), w[k] * ek)


def test_eval_term_missing_variable(H):
    with pytest.raises(Exception, match="x"):
        eval_term(H, parse_term("x", H.sig), {})


def test_sup_d_xx_is_exactly_zero(H):
    for S in (H, kpartite(2, 3)):
        enc = eval_formula(S, parse_formula("sup x . d(x,x)", S.sig))
        assert (enc.lo, enc.hi, enc.mode) == (0.0, 0.0, "exact")


def test_sup_norm_squared_certified():
    S = build_hilbert(2)
    enc = eval_formula(S, parse_formula("sup x . ip(x,x)", S.sig), budget=QuantBudget(delta=0.05))
    assert enc.mode == "certified"
    assert enc.lo <= 1.0 <= enc.hi and enc.hi - enc.lo <= 0.1


def test_inf_witness_half(H):
    phi = parse_formula("inf y . d(y, f[0.5,0](x, 0))", H.sig)
    rng = np.random.default_rng(3)
    for x in ball_points(rng, 5, 4):
        enc = eval_formula(H, phi, {"x": x})
        assert enc.lo <= 1e-12


def test_high_dimension_is_sampled_not_certified():
    S = build_hilbert(8)
    enc = eval_formula(S, parse_formula("sup x . ip(x,x)", S.sig))
    assert enc.mode == "sampled"


def test_discrete_quantifiers_exact_bruteforce():
    M = kpartite(2, 3)
    phi = parse_formula("sup x . inf y . E(x,y)", M.sig)
    E = M.relations["E"]
    want = max(min(0.0 if E[a, b] else 1.0 for b in range(6)) for a in range(6))
    enc = eval_formula(M, phi)
    assert enc.mode == "exact" and enc.lo == enc.hi == want


@given(st.floats(0.02, 0.2))
def test_finer_net_overlaps_coarser(delta):
    S = build_hilbert(2)
    phi = parse_formula("sup x . max(ip(x, x), d(x, 0))", S.sig)
    coarse = eval_formula(S, phi, budget=QuantBudget(delta=delta))
    fine = eval_formula(S, phi, budget=QuantBudget(delta=delta / 2))
    assert coarse.mode == fine.mode == "certified"
    assert fine.lo <= coarse.hi and coarse.lo <= fine.hi
