import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsemix.model import (
    EncoderParams,
    SaeParams,
    encoder_forward,
    encoder_param_count,
    init_encoder,
    init_sae,
    pseudo_reconstruct,
    responsibilities,
    sae_forward,
    sae_param_count,
)
from lsemix.numerics import Rng


def test_init_encoder_shapes_and_bounds():
    p = init_encoder(Rng(0), 784, 64)
    assert p.W.shape == (64, 784) and p.b.shape == (64,)
    bound = 1 / np.sqrt(784)
    assert np.abs(p.W).max() <= bound and np.abs(p.b).max() <= bound
    q = init_encoder(Rng(0), 784, 64)
    assert p.W.tobytes() == q.W.tobytes() and p.b.tobytes() == q.b.tobytes()


def test_init_rejects_empty_dims():
    with pytest.raises(ValueError):
        init_encoder(Rng(0), 0, 4)
    with pytest.raises(ValueError):
        init_sae(Rng(0), 3, 0)


def test_encoder_forward_identity():
    p = EncoderParams(np.eye(2), np.zeros(2))
    c = encoder_forward(p, np.array([[-1.0, 3.0]]))
    np.testing.assert_array_equal(c.Z, [[-1.0, 3.0]])
    np.testing.assert_array_equal(c.Dact, [[0.0, 3.0]])


def test_encoder_forward_bias_only():
    p = EncoderParams(np.zeros((1, 3)), np.array([5.0]))
    c = encoder_forward(p, np.random.default_rng(0).normal(size=(4, 3)))
    np.testing.assert_array_equal(c.Dact, 5.0)


def test_encoder_forward_per_sample_oracle():
    rng = np.random.default_rng(1)
    p = EncoderParams(rng.normal(size=(4, 6)), rng.normal(size=4))
    X = rng.normal(size=(5, 6))
    c = encoder_forward(p, X)
    for i in range(5):
        for j in range(4):
            z = sum(p.W[j, k] * X[i, k] for k in range(6)) + p.b[j]
            assert c.Z[i, j] == pytest.approx(z, abs=1e-12)
            assert c.Dact[i, j] == max(c.Z[i, j], 0.0)


def test_encoder_forward_shape_error():
    p = init_encoder(Rng(0), 4, 2)
    with pytest.raises(ValueError, match="D=4"):
        encoder_forward(p, np.zeros((3, 5)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relu_mask_consistency(seed):
    rng = np.random.default_rng(seed)
    p = EncoderParams(rng.normal(size=(5, 3)), rng.normal(size=5))
    c = encoder_forward(p, rng.normal(size=(7, 3)))
    np.testing.assert_array_equal(c.Dact > 0, c.Z > 0)
    assert (c.Dact >= 0).all()


def test_responsibilities_examples():
    r = responsibilities(np.zeros((2, 8)))
    np.testing.assert_allclose(r, 1 / 8, atol=1e-15)
    r = responsibilities(np.array([[0.0, np.log(3.0)]]))
    np.testing.assert_allclose(r, [[0.75, 0.25]], atol=1e-15)
    r = responsibilities(np.abs(np.random.default_rng(2).normal(size=(50, 10))) * 20)
    assert (r >= 0).all()
    assert np.abs(r.sum(axis=1) - 1).max() <= 1e-12


def test_pseudo_reconstruct():
    rng = np.random.default_rng(3)
    p = EncoderParams(rng.normal(size=(3, 4)), np.zeros(3))
    np.testing.assert_array_equal(pseudo_reconstruct(p, np.zeros((2, 3))), 0.0)
    ident = EncoderParams(np.eye(3), np.zeros(3))
    d = rng.random((2, 3))
    np.testing.assert_array_equal(pseudo_reconstruct(ident, d), d)
    out = pseudo_reconstruct(p, d)
    for i in range(2):
        for k in range(4):
            assert out[i, k] == pytest.approx(sum(d[i, j] * p.W[j, k] for j in range(3)), abs=1e-12)
    with pytest.raises(ValueError):
        pseudo_reconstruct(p, np.zeros((2, 4)))


def test_sae_zero_input():
    p = init_sae(Rng(0), 5, 3)
    p = SaeParams(p.W_enc, np.zeros(3), p.W_dec, np.zeros(5))
    A, X_hat = sae_forward(p, np.zeros((2, 5)))
    np.testing.assert_array_equal(A, 0.0)
    np.testing.assert_array_equal(X_hat, 0.0)


def test_sae_forward_matches_definition():
    rng = np.random.default_rng(4)
    p = init_sae(Rng(1), 6, 4)
    X = rng.random((3, 6))
    A, X_hat = sae_forward(p, X)
    np.testing.assert_allclose(A, np.maximum(X @ p.W_enc.T + p.b_enc, 0), atol=1e-14)
    np.testing.assert_allclose(X_hat, A @ p.W_dec.T + p.b_dec, atol=1e-14)


def test_sae_init_untied_and_bounded():
    p = init_sae(Rng(0), 784, 64)
    assert p.W_dec.shape == (784, 64)
    assert np.abs(p.W_enc).max() <= 1 / np.sqrt(784)
    assert np.abs(p.W_dec).max() <= 1 / np.sqrt(64)
    assert not np.array_equal(p.W_dec, p.W_enc.T)


def test_parameter_counts():
    assert encoder_param_count(784, 64) == 50_240
    assert sae_param_count(784, 64) == 101_200
    assert init_encoder(Rng(0), 784, 64).n_params() == 50_240
    sae = init_sae(Rng(0), 784, 64)
    assert sae.n_params() == 101_200
    assert sae.encoder_params() == 50_240
