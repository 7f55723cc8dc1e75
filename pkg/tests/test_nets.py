import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gen import ball_points
from metricherb.herbrand import ball_samples, compact_epsilon_net, tail_pieces
from metricherb.models import build_hilbert, expand_projection


def _worst(net, K, lam, pts):
    fa = pts @ (lam * np.eye(K.shape[0]) + K).T
    return np.linalg.norm(fa[:, None, :] - (lam * pts[:, None, :] + net.vectors[None]), axis=-1).min(axis=1).max()


def test_zero_operator_single_piece():
    net = compact_epsilon_net(np.zeros((4, 4)), eps=0.2, lam=0.5)
    assert net.k == 1 and not net.vectors.any()
    assert net.pieces[0][0] == 0.5


def test_rank_one_segment():
    K = np.zeros((8, 8))
    K[1, 0] = 1.0  # a -> <a, e1> e2
    net = compact_epsilon_net(K, radius=1, eps=0.25)
    assert net.rank == 1 and net.k <= math.ceil(1 / 0.25) + 1
    assert _worst(net, K, 0.0, ball_points(np.random.default_rng(0), 10_000, 8)) <= 0.25


def _greedy_oracle(semi, eps, h=0.005):
    """Greedy ball cover of a dense grid sample of the 2-d ellipse, centres on the sample."""
    a, b = semi
    g = np.array([(x, y) for x in np.arange(-a, a + h, h) for y in np.arange(-b, b + h, h)
                  if (x / a) ** 2 + (y / b) ** 2 <= 1])
    left = np.ones(len(g), bool)
    k = 0
    while left.any():
        d = np.linalg.norm(g[:, None] - g[left][None], axis=-1) <= eps
        j = int(np.argmax(d.sum(axis=1)))
        left[left] &= ~d[j]
        k += 1
    return k


def test_two_axis_ellipse():
    K = np.diag([0.5, 0.1, 0, 0, 0, 0, 0, 0])
    rng = np.random.default_rng(1)
    pts = ball_points(rng, 10_000, 8)
    oracle = _greedy_oracle((0.5, 0.1), 0.2)
    for method in ("grid", "greedy"):
        net = compact_epsilon_net(K, eps=0.2, method=method)
        assert _worst(net, K, 0.0, pts) <= 0.2
        # 3 points of the major axis are pairwise more than 2 eps apart, so 3 pieces are necessary
        assert 3 <= net.k <= 2 * oracle


def test_complex_operator():
    rng = np.random.default_rng(2)
    K = (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))) @ rng.standard_normal((2, 4))
    K /= np.linalg.norm(K, 2)
    net = compact_epsilon_net(K, eps=0.3, lam=0.5j)
    pts = ball_samples(4, 5000, rng, field="C")
    assert np.iscomplexobj(net.vectors)
    assert net.residuals(K, pts).max() <= 0.3


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        compact_epsilon_net(np.eye(2), eps=0.0)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.floats(0.1, 0.5), st.floats(0.5, 2.0))
def test_net_guarantee(seed, rank, eps, radius):
    rng = np.random.default_rng(seed)
    K = rng.standard_normal((6, rank)) @ rng.standard_normal((rank, 6))
    K /= np.linalg.norm(K, 2)
    net = compact_epsilon_net(K, radius=radius, eps=eps)
    pts = radius * ball_points(rng, 3000, 6)
    assert net.residuals(K, pts).max() <= eps


# -------------------------------------------------------------------- tails


@pytest.fixture(scope="module")
def P6():
    return expand_projection(build_hilbert(6), 1)


def test_tail_of_half(P6):
    rep = tail_pieces(P6, lambda x: 0.5 * x, 0.1)
    assert rep.found and rep.m == 0 and [float(l) for l in rep.lambdas] == [0.5]


def test_tail_after_first_coordinate(P6):
    def f(x):
        y = 0.5 * x
        y[..., 0] = x[..., 0]
        return y

    rep = tail_pieces(P6, f, 0.1)
    assert rep.found and rep.m == 1 and [float(l) for l in rep.lambdas] == [0.5]
    assert rep.per_m[0] >= 0.1


def test_tail_of_constant_fails(P6):
    v0 = np.zeros(6)
    v0[0] = 0.5
    rep = tail_pieces(P6, lambda x: np.broadcast_to(v0, x.shape), 0.2)
    assert not rep.found and rep.m is None
    assert rep.to_json()["found"] is False
