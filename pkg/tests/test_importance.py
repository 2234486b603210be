import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqsemcom import codec
from vqsemcom.importance import (
    feature_gradients,
    identity_ranking,
    importance_weights,
    ranking_csv,
    reconstruction_loss,
)


def test_loss_identical():
    z = np.arange(16.0).reshape(4, 4)
    assert reconstruction_loss(z, z) == 0.0


def test_loss_black_white():
    assert reconstruction_loss(np.zeros((4, 4)), np.full((4, 4), 255.0)) == 65025.0


def test_loss_matches_naive_sum(rng):
    a = rng.uniform(0, 255, (9, 7))
    b = rng.uniform(0, 255, (9, 7))
    naive = 0.0
    for i in range(9):
        for j in range(7):
            naive += (b[i, j] - a[i, j]) ** 2
    assert reconstruction_loss(a, b) == pytest.approx(naive / 63, rel=1e-12)


def test_loss_shape_mismatch():
    with pytest.raises(ValueError):
        reconstruction_loss(np.zeros((2, 2)), np.zeros((2, 3)))


def test_gradient_zero_at_perfect_reconstruction(rng):
    z_e = rng.normal(size=(16, 4, 4))
    assert not feature_gradients(z_e, z_e.copy(), 256).any()


def test_gradient_single_position():
    z_e = np.zeros((16, 4, 4))
    K = z_e.copy()
    K[5, 2, 1] = 0.75
    g = feature_gradients(z_e, K, 256)
    assert g[5, 2, 1] == 2 * 0.75 / 256
    g[5, 2, 1] = 0
    assert not g.any()


def fd_gradient(K, z, B, step=1e-5):
    """Central differences of loss(decode(K), z) over every feature element."""
    grad = np.zeros_like(K)
    for idx in np.ndindex(K.shape):
        kp = K.copy()
        km = K.copy()
        kp[idx] += step
        km[idx] -= step
        lp = reconstruction_loss(z, codec.dct_decode(kp, B, clamp=False))
        lm = reconstruction_loss(z, codec.dct_decode(km, B, clamp=False))
        grad[idx] = (lp - lm) / (2 * step)
    return grad


def test_gradient_matches_finite_differences(rng):
    z = rng.uniform(0, 255, (8, 8))
    z_e = codec.dct_encode(z, 4)
    K = z_e + rng.normal(scale=10, size=z_e.shape)
    g = feature_gradients(z_e, K, z.size)
    fd = fd_gradient(K, z, 4)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-6


def test_weights_all_zero():
    w = importance_weights(np.zeros((16, 4, 4)))
    assert not w.omega.any()
    np.testing.assert_array_equal(w.ranking, np.arange(16))


def test_weights_single_channel():
    g = np.zeros((16, 4, 4))
    g[3] = 1.0
    w = importance_weights(g)
    assert w.omega[3] == 1.0
    assert w.ranking[0] == 3


def test_weights_match_naive_mean(rng):
    g = rng.normal(size=(16, 5, 6))
    w = importance_weights(g)
    for i in range(16):
        naive = sum(g[i, n, m] for n in range(5) for m in range(6)) / 30
        assert w.omega[i] == pytest.approx(naive, abs=1e-12)


def test_ranking_uses_magnitude_with_index_ties():
    g = np.zeros((4, 1, 1))
    g[:, 0, 0] = [0.5, -2.0, 2.0, 0.5]
    np.testing.assert_array_equal(importance_weights(g).ranking, [1, 2, 0, 3])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31), alpha=st.floats(1e-3, 1e3))
def test_ranking_is_permutation_and_scale_invariant(seed, alpha):
    g = np.random.default_rng(seed).normal(size=(16, 3, 3))
    w = importance_weights(g)
    assert sorted(w.ranking.tolist()) == list(range(16))
    np.testing.assert_array_equal(importance_weights(alpha * g).ranking, w.ranking)


def test_non_finite_rejected():
    g = np.zeros((2, 2, 2))
    g[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        importance_weights(g)


def test_ranking_csv():
    assert ranking_csv(identity_ranking(4)) == "0,1,2,3"
