import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricherb.models import (
    build_discrete,
    cyclic,
    elementary_abelian,
    grid,
    kpartite,
    path_graph,
    union_complete,
    vector_space_f2,
)
from metricherb.ubiq import (
    PartitionError,
    UbiqBudgetError,
    automorphism_generators,
    check_finitely_partitioned,
    check_ultrahomogeneous,
    classify_equivariant_function,
    expand_partition,
    function_table,
    is_automorphism,
)


def _parts(M):
    return [[l for l in M.labels if l[0] == i] for i in sorted({l[0] for l in M.labels})]


# -------------------------------------------------------------------- partitions


def test_union_complete_blocks():
    M = union_complete(2, 5)
    w = check_finitely_partitioned(M, _parts(M))
    assert w.ok and w.failing is None and w.checked == 8


def test_singletons_always_pass():
    M = path_graph(5)
    assert check_finitely_partitioned(M, [[l] for l in M.labels]).ok


def test_mixed_block_witness():
    M = kpartite(2, 3, constants=False)
    w = check_finitely_partitioned(M, [[(0, 0), (1, 0)], [(0, 1), (0, 2)], [(1, 1), (1, 2)]])
    assert not w.ok and w.failing == ((0, 0), (1, 0)) and w.symbol == "E"
    # the reported tuple really is an edge broken by the swap
    E = M.relations["E"]
    a, b = (M.index(l) for l in w.tuple_)
    perm = list(range(len(M)))
    i, j = M.index((0, 0)), M.index((1, 0))
    perm[i], perm[j] = j, i
    assert E[a, b] != E[perm[a], perm[b]]


def test_malformed_partitions():
    M = kpartite(2, 3, constants=False)
    with pytest.raises(PartitionError):
        check_finitely_partitioned(M, [[(0, 0)]])
    with pytest.raises(PartitionError):
        check_finitely_partitioned(M, [M.labels, [(0, 0)]])


def _random_graph(data, n):
    bits = data.draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    E = np.zeros((n, n), bool)
    for (i, j), b in zip(itertools.combinations(range(n), 2), bits):
        E[i, j] = E[j, i] = b
    return E


def _random_partition(data, n):
    colours = data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    return [[i for i in range(n) if colours[i] == c] for c in sorted(set(colours))]


@settings(max_examples=60)
@given(st.integers(2, 6), st.data())
def test_transpositions_agree_with_whole_group(n, data):
    M = build_discrete(range(n), relations={"E": _random_graph(data, n)})
    blocks = _random_partition(data, n)
    verdict = check_finitely_partitioned(M, blocks).ok
    # oracle: every element of Sym(X1) x ... x Sym(Xk) preserves E
    E = M.relations["E"]
    oracle = True
    for perms in itertools.product(*(itertools.permutations(b) for b in blocks)):
        p = np.arange(n)
        for b, img in zip(blocks, perms):
            p[list(b)] = img
        if not np.array_equal(E[np.ix_(p, p)], E):
            oracle = False
            break
    assert verdict == oracle
    M2 = expand_partition(M, blocks)
    assert check_finitely_partitioned(M2, blocks).ok == verdict
    if verdict:
        assert check_ultrahomogeneous(M2, max_size=3).ok


# -------------------------------------------------------------------- ultrahomogeneity


def test_k33_ultrahomogeneous():
    assert check_ultrahomogeneous(kpartite(2, 3, constants=False), max_size=3).ok


def test_path_fails_endpoint_to_midpoint():
    rep = check_ultrahomogeneous(path_graph(4), max_size=3)
    assert not rep.ok
    assert ((0,), (1,)) in rep.failures


def test_expanded_k33():
    K = kpartite(2, 3, constants=False)
    M2 = expand_partition(K, _parts(K))
    assert set(M2.relations) == {"E", "R1", "R2"}
    assert np.array_equal(M2.relations["E"], K.relations["E"])
    assert check_finitely_partitioned(M2, _parts(K)).ok
    assert check_ultrahomogeneous(M2, max_size=3).ok


def test_abelian_times_finite_group():
    G = elementary_abelian(2, 2, cyclic(3))
    assert check_ultrahomogeneous(G, max_size=2).ok


def test_budget():
    with pytest.raises(UbiqBudgetError):
        check_ultrahomogeneous(grid(2, 4))
    with pytest.raises(UbiqBudgetError):
        check_ultrahomogeneous(path_graph(4), max_size=5)


def test_generators_are_automorphisms_and_generate():
    K = kpartite(2, 3, constants=False)
    gens = automorphism_generators(K)
    assert all(is_automorphism(K, g) for g in gens)
    # closure has |Aut(K33)| = 2 * 3! * 3! elements
    seen = {tuple(range(6))}
    frontier = list(seen)
    while frontier:
        p = frontier.pop()
        for g in gens:
            q = tuple(g[i] for i in p)
            if q not in seen:
                seen.add(q)
                frontier.append(q)
    assert len(seen) == 72


# -------------------------------------------------------------------- classification


def test_first_projection():
    M = kpartite(2, 3)
    cov = classify_equivariant_function(M, function_table(M, lambda a, b: a, 2))
    assert cov.covered and cov.terms == ("x1",)


def test_edge_switch_on_k33():
    K = kpartite(2, 3, constants=False)
    E = K.relations["E"]
    f = function_table(K, lambda a, b: a if E[K.index(a), K.index(b)] else b, 2)
    cov = classify_equivariant_function(K, f)
    assert cov.covered and cov.verified and set(cov.terms) == {"x1", "x2"}
    # exhaustive check over all 36 pairs
    for a, b in itertools.product(range(6), repeat=2):
        assert f[a, b] in (a, b)
    assert sum(cov.pieces.values()) >= 36


def test_translation_word():
    F = vector_space_f2(4, constants={"c": "1.0.1.1"})
    c = F.constants["c"]
    f = function_table(F, lambda a: F.labels[F.apply("add", F.index(a), c)], 1)
    cov = classify_equivariant_function(F, f)
    assert cov.covered and cov.terms == ("add(x1, c)",)


def test_non_equivariant_reported():
    K = kpartite(2, 3, constants=False)
    cov = classify_equivariant_function(K, function_table(K, lambda a, b: (0, 0), 2))
    assert not cov.equivariant and not cov.covered
    assert cov.counterexample is not None and "automorphism" in cov.counterexample


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_returned_covers_verify(seed):
    rng = np.random.default_rng(seed)
    K = kpartite(2, 3, constants=False)
    E = K.relations["E"]
    choice = rng.integers(0, 2, size=2)
    # equivariant by construction: the choice depends only on whether a, b are adjacent
    f = np.array([[[a, b][choice[int(E[a, b])]] for b in range(6)] for a in range(6)])
    cov = classify_equivariant_function(K, f)
    assert cov.covered
    cols = {"x1": lambda a, b: a, "x2": lambda a, b: b}
    for a, b in itertools.product(range(6), repeat=2):
        assert any(cols[t](a, b) == f[a, b] for t in cov.terms)
