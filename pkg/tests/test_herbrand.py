import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from metricherb.herbrand import (
    AlphaContradiction,
    AlphaEnvelope,
    CoverNotFound,
    FunctionLeavesBall,
    HerbrandCertificate,
    TARGETS,
    candidate_family,
    cover_definable_function,
    fit_alpha,
    greedy_cover,
    lambda_grid,
    search_classical,
    sample_points,
    search_continuous,
    verify_certificate,
)
from metricherb.logic import Var, eval_formula, parse_formula, parse_term
from metricherb.models import build_hilbert, expand_projection, kpartite, vector_space_f2
from metricherb.normalizer import AffineNormalForm, Monomial, normalize_term


@pytest.fixture(scope="module")
def H8():
    return build_hilbert(8, constants={"v0": [0.5] + [0] * 7})


def _nf(theory="hilbert", **coeffs):
    out = {}
    for k, v in coeffs.items():
        out[Monomial(k != "x", k)] = Fraction(v)
    return AffineNormalForm(theory, out)


# -------------------------------------------------------------------- greedy cover


def test_greedy_prefers_largest_gain():
    covers = np.array([[1, 1, 0, 0], [1, 1, 1, 1], [0, 0, 1, 1]], dtype=bool)
    res = np.zeros((3, 4))
    chosen, left = greedy_cover(covers, res, np.ones(4, bool))
    assert chosen == [1] and not left.any()


def test_greedy_ties_by_residual_then_key_then_index():
    covers = np.ones((3, 2), dtype=bool)
    res = np.array([[0.2, 0.1], [0.1, 0.1], [0.1, 0.1]])
    assert greedy_cover(covers, res, np.ones(2, bool))[0] == [1]
    assert greedy_cover(covers, res, np.ones(2, bool), keys=[(0,), (2,), (1,)])[0] == [2]
    assert greedy_cover(covers, np.zeros((3, 2)), np.ones(2, bool))[0] == [0]


def test_greedy_reports_uncovered():
    covers = np.array([[1, 0, 0]], dtype=bool)
    chosen, left = greedy_cover(covers, np.zeros((1, 3)), np.array([1, 1, 0], bool))
    assert chosen == [0] and left.tolist() == [False, True, False]


def test_polish_lowers_worst_residual():
    covers = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=bool)
    res = np.array([[0.5, 0.8, 0.5], [1.0, 0.7, 0.9], [0.9, 0.8, 0.1]])
    raw, _ = greedy_cover(covers, res, np.ones(3, bool), polish=False)
    pol, _ = greedy_cover(covers, res, np.ones(3, bool))
    # worst of the column minima: 0.9 before the swap, 0.7 after
    assert raw == [0, 2] and pol == [0, 1]


@st.composite
def cover_problems(draw):
    C = draw(st.integers(1, 8))
    N = draw(st.integers(1, 10))
    covers = draw(arrays(bool, (C, N)))
    res = draw(arrays(np.float64, (C, N), elements=st.floats(0, 1)))
    return covers, res


@given(cover_problems(), st.data())
def test_dominated_candidates_change_nothing(problem, data):
    covers, res = problem
    need = covers.any(axis=0)
    base, _ = greedy_cover(covers, res, need)
    rows = data.draw(st.lists(st.integers(0, len(covers) - 1), min_size=1, max_size=4))
    extra_cov = np.array([covers[r] & data.draw(arrays(bool, covers.shape[1])) for r in rows])
    extra_res = np.array([res[r] + data.draw(arrays(np.float64, covers.shape[1], elements=st.floats(0, 1)))
                          for r in rows])
    chosen, left = greedy_cover(np.vstack([covers, extra_cov]), np.vstack([res, extra_res]), need)
    assert chosen == base and not left.any()


@given(cover_problems())
def test_polish_never_hurts(problem):
    covers, res = problem
    need = covers.any(axis=0)
    raw, _ = greedy_cover(covers, res, need, polish=False)
    pol, _ = greedy_cover(covers, res, need)
    assert len(pol) == len(raw)
    assert covers[pol].any(axis=0)[need].all()
    if need.any():
        assert res[pol][:, need].min(axis=0).max() <= res[raw][:, need].min(axis=0).max()


# -------------------------------------------------------------------- classical


def test_kpartite_edge_cover():
    M = kpartite(2, 3)
    cert = search_classical(M, parse_formula("E(x,y)", M.sig))
    assert cert.mode == "exact" and cert.k == 2
    assert sorted(w.text for w in cert.terms) == [("c1",), ("c2",)]
    E = M.relations["E"]
    for a in range(6):
        assert any(E[a, M.constants[w.text[0]]] for w in cert.terms)
    assert verify_certificate(cert).ok


def test_translation_in_f2():
    F = vector_space_f2(4, constants={"c": "1.0.1.1"})
    cert = search_classical(F, parse_formula("d(y, add(x, c))", F.sig), x_vars=["x"])
    assert cert.k == 1 and cert.terms[0].text == ("add(x, c)",)


def test_trivially_true_formula():
    M = kpartite(2, 3)
    cert = search_classical(M, parse_formula("d(y,y)", M.sig), x_vars=["x"], y_vars=["y"])
    assert cert.k == 1 and cert.terms[0].text == ("x",)


def test_classical_failure_lists_uncovered():
    M = kpartite(2, 3, constants=False)
    with pytest.raises(CoverNotFound) as info:
        search_classical(M, parse_formula("E(x,y)", M.sig))
    assert len(info.value.uncovered) == 6


def test_tampered_certificate_rejected():
    M = kpartite(2, 3)
    cert = search_classical(M, parse_formula("E(x,y)", M.sig))
    data = cert.to_json()
    data["terms"] = data["terms"][:1]
    rep = verify_certificate(HerbrandCertificate.from_json(data))
    assert not rep.ok and "no witness" in rep.message


def test_verifier_checks_against_own_tables():
    M = kpartite(2, 3)
    cert = search_classical(M, parse_formula("E(x,y)", M.sig))
    data = json.loads(cert.dumps())
    # move c1 into the other part: the stored table no longer supports the cover
    data["model"]["constants"]["c1"] = data["model"]["constants"]["c2"]
    assert not verify_certificate(HerbrandCertificate.from_json(data)).ok


# -------------------------------------------------------------------- continuous


def test_half_map_single_term(H8):
    phi = parse_formula("d(y, f[0.5,0](x, 0))", H8.sig)
    fam = candidate_family(H8, lambda_grid(Fraction(1, 4)), constants=[])
    cert = search_continuous(H8, phi, 0.01, fam, samples=200)
    assert cert.k == 1 and cert.max_residual == 0.0
    assert AffineNormalForm.from_json(cert.terms[0].normal_form[0]) == _nf(x=Fraction(1, 2))


def test_norm_difference_identity(H8):
    phi = parse_formula("absdiff(d(y,0), d(x,0))", H8.sig)
    cert = search_continuous(H8, phi, 0.05, candidate_family(H8, [0, Fraction(1, 2), 1], constants=[]),
                             samples=200, alpha=True)
    assert cert.k == 1 and cert.max_residual == 0.0
    assert cert.terms[0].text == ("x",)
    assert cert.alpha is not None and float(np.max(cert.alpha(np.linspace(0, 1, 11)))) == 0.0


def test_gate_soundness(H8):
    # inf_y of this formula is max(|x| - 1/2, 0): only samples with |x| <= 1/2 + delta pass the gate
    phi = parse_formula("max(d(y, x), sub(d(x, 0), 0.5))", H8.sig)
    fam = candidate_family(H8, [0, 1], constants=[])
    cert = search_continuous(H8, phi, 0.1, fam, samples=300, delta_gate=0.05, seed=4)
    env, n, _ = sample_points(H8, [Var("x", H8.sig.default_sort)], cert.samples - len(H8.special_points(
        H8.sig.default_sort)), 4)
    norms = np.linalg.norm(env["x"], axis=-1)
    assert n == cert.samples
    assert 0 < cert.gated == int((norms - 0.5 <= 0.05).sum()) < cert.samples
    assert cert.k == 1 and cert.terms[0].text == ("x",)


def test_vacuous_gate_flagged(H8):
    phi = parse_formula("addc(0.5, d(y, x))", H8.sig)
    cert = search_continuous(H8, phi, 0.1, candidate_family(H8, [1], constants=[]), samples=50)
    assert cert.vacuous and "vacuous" in cert.flags and cert.k == 0


def test_empty_family_rejected(H8):
    with pytest.raises(ValueError):
        search_continuous(H8, parse_formula("d(y, x)", H8.sig), 0.1, [])


def test_bump_cover_reproducible_across_workers():
    S = build_hilbert(8)
    a = cover_definable_function(S, "bump", 0.13, mesh=0.25, seed=3)
    b = cover_definable_function(S, "bump", 0.13, mesh=0.25, seed=3, workers=3)
    assert a.dumps() == b.dumps()
    assert a.max_residual <= 0.13
    assert a.mode == "sampled"
    assert verify_certificate(a).ok


def test_bump_residual_bounded_by_radial_sweep():
    S = build_hilbert(8)
    cert = cover_definable_function(S, "bump", 0.13, mesh=0.25, samples=2000, seed=1)
    lams = sorted(float(AffineNormalForm.from_json(w.normal_form[0]).lam("x")) for w in cert.terms)
    r = np.linspace(0, 1, 100_001)
    sweep = (np.abs(1 - r[:, None] ** 2 - np.array(lams)[None]).min(axis=1) * r).max()
    assert cert.max_residual <= sweep + 1e-12
    assert sweep <= 0.13


def test_sampled_certificate_tamper_detected():
    S = build_hilbert(8)
    cert = cover_definable_function(S, "bump", 0.13, mesh=0.25, seed=0)
    data = cert.to_json()
    data["residual"]["max"] = 0.01
    assert not verify_certificate(HerbrandCertificate.from_json(data)).ok


def test_identity_and_constant_functions(H8):
    fam = candidate_family(H8, lambda_grid(Fraction(1, 2)))
    ident = cover_definable_function(H8, lambda x: x, 0.05, candidates=fam, samples=200)
    assert ident.k == 1 and ident.terms[0].text == ("x",)
    v0 = H8.constants["v0"]
    const = cover_definable_function(H8, lambda x: np.broadcast_to(v0, x.shape), 0.05, candidates=fam, samples=200)
    assert const.k == 1
    assert AffineNormalForm.from_json(const.terms[0].normal_form[0]) == _nf(v0=1)


def test_projection_affine_function_recovered():
    P = expand_projection(build_hilbert(8, constants={"v0": [0.5] + [0] * 7}), 4)
    t = parse_term("f[0.5,0.25](P(x), f[0.5,0.5](x, v0))", P.sig)
    nf = normalize_term(t, "projection")
    cert = cover_definable_function(P, t, 0.05, candidates=[nf.scaled(Fraction(1, 2)), nf], samples=300)
    assert cert.k == 1 and cert.max_residual <= 1e-9
    assert AffineNormalForm.from_json(cert.terms[0].normal_form[0]) == nf


def test_function_leaving_ball(H8):
    with pytest.raises(FunctionLeavesBall) as info:
        cover_definable_function(H8, lambda x: 2 * x, 0.1, samples=100)
    assert info.value.norm > 1


def test_targets_registered():
    assert {"bump", "half", "identity"} <= set(TARGETS)
    x = np.array([[0.5, 0, 0]])
    assert np.allclose(TARGETS["bump"].fn(x), 0.75 * x)


def test_certificate_json_roundtrip(H8):
    cert = cover_definable_function(H8, "half", 0.05, mesh=0.5, alpha=True)
    again = HerbrandCertificate.from_json(json.loads(cert.dumps()))
    assert again.dumps() == cert.dumps()


# -------------------------------------------------------------------- alpha envelope


def test_alpha_zero_when_all_residuals_vanish():
    a = fit_alpha([(0.0, 0.0), (0.3, 0.0), (0.9, 0.0)])
    assert np.all(a(np.linspace(0, 1, 21)) == 0.0)


def test_alpha_two_pairs():
    a = fit_alpha([(0.0, 0.0), (0.5, 0.2)])
    assert a(0.5) >= 0.2 and a(0.0) == 0.0
    assert a(0.25) == pytest.approx(0.1)


def test_alpha_recovers_square_on_grid():
    s = np.linspace(0, 1, 21)
    a = fit_alpha(list(zip(s, s**2)))
    fine = np.linspace(0, 1, 1001)
    # linear interpolation of s^2 on a grid of step h overshoots by at most h^2 / 4
    assert np.all(a(fine) >= fine**2 - 1e-12)
    assert np.max(a(fine) - fine**2) <= (1 / 20) ** 2 / 4 + 1e-12


def test_alpha_contradiction_in_exact_mode():
    with pytest.raises(AlphaContradiction):
        fit_alpha([(0.0, 0.1)], exact=True)
    soft = fit_alpha([(0.0, 0.1), (0.5, 0.3)])
    assert soft.violations == ((0.0, 0.1),)


def test_envelope_validation():
    with pytest.raises(ValueError):
        AlphaEnvelope(((0.1, 0.0),))
    with pytest.raises(ValueError):
        AlphaEnvelope(((0.0, 0.0), (0.5, 0.3), (0.6, 0.2)))


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=40))
def test_alpha_properties(pairs):
    a = fit_alpha(pairs)
    fine = np.linspace(0, 1, 257)
    vals = a(fine)
    assert a(0.0) == 0.0
    assert np.all(np.diff(vals) >= -1e-15)
    for s, r in pairs:
        if s > 1e-12:  # fit_alpha treats smaller first coordinates as 0
            assert a(s) >= r - 1e-12
