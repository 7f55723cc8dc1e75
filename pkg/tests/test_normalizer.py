from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gen import ball_points, random_term
from metricherb.logic import Var, eval_term, format_term, parse_term
from metricherb.models import (
    build_hilbert,
    cyclic,
    expand_group_action,
    expand_projection,
    expand_unitary,
    kpartite,
    roots_of_unity,
    vector_space_f2,
)
from metricherb.normalizer import (
    AffineNormalForm,
    BudgetExceeded,
    Monomial,
    NormalizeError,
    enumerate_terms,
    evaluate,
    normalize_term,
    realize,
    term_equal_semantic,
)
from metricherb.scalars import modulus

V0 = [0.5, 0, 0, 0]


def _models():
    H = build_hilbert(4, constants={"v0": V0})
    U = expand_unitary(build_hilbert(4, "C", {"v0": V0}), roots_of_unity(4))
    P = expand_projection(build_hilbert(4, constants={"v0": V0}), 2)
    G = expand_group_action(build_hilbert(4, constants={"v0": V0}), cyclic(2),
                            {"0": np.eye(4), "1": np.diag([1.0, -1.0, 1.0, -1.0])})
    return {"hilbert": (H, ()), "unitary": (U, ("U", "Uinv")), "projection": (P, ("P",)),
            "group": (G, ("g0", "g1"))}


MODELS = _models()


def test_variable_normal_form():
    H, _ = MODELS["hilbert"]
    nf = normalize_term(parse_term("x", H.sig), "hilbert")
    assert nf.coeffs == {Monomial(False, "x"): 1}


def test_half_sum_with_constant():
    H, _ = MODELS["hilbert"]
    nf = normalize_term(parse_term("f[0.5,0.5](x, v0)", H.sig), "hilbert")
    assert nf.lam("x") == Fraction(1, 2)
    assert nf.constant_part().coeffs == {Monomial(True, "v0"): Fraction(1, 2)}


def test_unitary_conjugation_collapses():
    U, _ = MODELS["unitary"]
    t = parse_term("U(f[0.5,0](Uinv(x), 0))", U.sig)
    nf = normalize_term(t, "unitary")
    assert nf.window("x") == {0: Fraction(1, 2)}
    rng = np.random.default_rng(0)
    x = ball_points(rng, 100, 4, "C")
    assert np.abs(eval_term(U, t, {"x": x}) - evaluate(nf, U, {"x": x})).max() <= 1e-9


def test_foreign_symbol_rejected():
    P, _ = MODELS["projection"]
    with pytest.raises(NormalizeError):
        normalize_term(parse_term("P(x)", P.sig), "hilbert")


def test_group_identity_written_as_x():
    G, _ = MODELS["group"]
    nf = normalize_term(parse_term("g1(g1(x))", G.sig), "group", G.group)
    assert nf.coeffs == {Monomial(False, "x"): 1}


@pytest.mark.parametrize("theory", sorted(MODELS))
@given(seed=st.integers(0, 2**32 - 1))
def test_normal_form_soundness(theory, seed):
    S, unary = MODELS[theory]
    rng = np.random.default_rng(seed)
    t = random_term(S, rng, 6, unary=unary)
    nf = normalize_term(t, theory, getattr(S, "group", None))
    env = {v: ball_points(rng, 100, 4, S.field) for v in ("x", "y", "z")}
    assert np.abs(eval_term(S, t, env) - evaluate(nf, S, env)).max() <= 1e-9


@pytest.mark.parametrize("theory", sorted(MODELS))
@given(seed=st.integers(0, 2**32 - 1))
def test_idempotent_and_contained(theory, seed):
    S, unary = MODELS[theory]
    group = getattr(S, "group", None)
    t = random_term(S, np.random.default_rng(seed), 5, unary=unary)
    nf = normalize_term(t, theory, group)
    again = normalize_term(realize(nf, S.sig), theory, group)
    assert set(again.coeffs) == set(nf.coeffs)
    assert all(abs(complex(again.coeffs[m]) - complex(nf.coeffs[m])) <= 1e-12 for m in nf.coeffs)
    assert all(modulus(c) <= 1 for c in nf.coeffs.values())
    # multivariate l1 bound over variables and constants together
    assert nf.l1_mass_exact() is None or nf.l1_mass_exact() <= 1
    assert nf.l1_mass() <= 1 + 1e-12


def test_laurent_window_trimmed():
    U, _ = MODELS["unitary"]
    nf = normalize_term(parse_term("f[0.5,-0.5](U(U(x)), U(U(x)))", U.sig), "unitary")
    assert nf.window("x") == {}


def test_json_roundtrip_exact():
    U, _ = MODELS["unitary"]
    t = parse_term("f[1/3,1/3](U(x), f[0.5,0.5](Uinv(x), v0))", U.sig)
    nf = normalize_term(t, "unitary")
    assert AffineNormalForm.from_json(nf.to_json()) == nf
    assert nf.window("x") == {1: Fraction(1, 3), -1: Fraction(1, 6)}


# -------------------------------------------------------------------- semantic equality


def test_equal_to_realized_normal_form():
    H, _ = MODELS["hilbert"]
    t = parse_term("f[0.5,0.25](f[0.5,0.5](x, v0), f[-1,0](y, x))", H.sig)
    r = realize(normalize_term(t, "hilbert"), H.sig)
    assert term_equal_semantic(t, r, H).equal


def test_identity_by_unit_coefficient():
    H, _ = MODELS["hilbert"]
    assert term_equal_semantic(parse_term("x", H.sig), parse_term("f[1,0](x, 0)", H.sig), H).equal


def test_half_is_distinct_with_unit_witness():
    H, _ = MODELS["hilbert"]
    v = term_equal_semantic(parse_term("x", H.sig), parse_term("f[0.5,0](x, 0)", H.sig), H)
    assert not v.equal
    assert v.max_distance == pytest.approx(0.5)
    assert np.linalg.norm(v.witness["x"]) == pytest.approx(1.0)


def test_discrete_equality_is_exhaustive():
    F = vector_space_f2(3, constants={"c": "1.0.1"})
    v = term_equal_semantic(parse_term("add(add(x, c), c)", F.sig), parse_term("x", F.sig), F)
    assert v.equal and v.exhaustive


# -------------------------------------------------------------------- enumeration


def test_enumerate_graph_depth0():
    M = kpartite(2, 3)
    x = Var("x", M.sig.default_sort)
    assert [format_term(t) for t in enumerate_terms(M.sig, [x], 0, M)] == ["x", "c1", "c2"]


def test_enumerate_f2_includes_translation():
    F = vector_space_f2(3, constants={"c": "1.0.1"})
    x = Var("x", F.sig.default_sort)
    terms = list(enumerate_terms(F.sig, [x], 2, F))
    target = parse_term("add(x, c)", F.sig)
    assert any(term_equal_semantic(t, target, F).equal for t in terms)
    # no two enumerated terms are equal as functions
    for i in range(len(terms)):
        for j in range(i):
            assert not term_equal_semantic(terms[i], terms[j], F).equal


def test_enumerate_hilbert_grid_matches_products():
    H = build_hilbert(2)
    x = Var("x", H.sig.default_sort)
    grid = [Fraction(v) for v in (0, Fraction(1, 2), Fraction(-1, 2), 1, -1)]
    got = {normalize_term(t, "hilbert").lam("x") for t in enumerate_terms(H.sig, [x], 2, H, grid=grid)}
    # oracle: lambda values of f[a,b](s,t) built by hand from depth 0 (x -> 1, 0 -> 0)
    pairs = [(a, b) for a in grid for b in grid if abs(a) + abs(b) <= 1]
    level = {Fraction(1), Fraction(0)}
    for _ in range(2):
        level = level | {a * l + b * m for a, b in pairs for l in level for m in level}
    assert got == level


def test_enumerate_is_deterministic():
    F = vector_space_f2(3, constants={"c": "1.0.1"})
    x = Var("x", F.sig.default_sort)
    a = [format_term(t) for t in enumerate_terms(F.sig, [x], 2, F)]
    b = [format_term(t) for t in enumerate_terms(F.sig, [x], 2, F)]
    assert a == b


def test_enumerate_budget():
    H = build_hilbert(2)
    x = Var("x", H.sig.default_sort)
    grid = [Fraction(k, 8) for k in range(-8, 9)]
    with pytest.raises(BudgetExceeded):
        list(enumerate_terms(H.sig, [x], 3, H, grid=grid, max_candidates=1000))
