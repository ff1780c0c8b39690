import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lsemix.numerics import (
    Rng,
    column_stats,
    correlation_matrix,
    logsumexp_neg,
    matmul,
    rng_normal,
    rng_uniform,
    softmax_neg,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vectors = hnp.arrays(np.float64, st.integers(1, 20), elements=finite)


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for k in range(a.shape[1]):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


def test_matmul_identity_and_scalar():
    m = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(matmul(np.eye(3), m), m)
    assert matmul([[2.0]], [[3.0]])[0, 0] == 6.0


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
    np.testing.assert_allclose(matmul(a, b), triple_loop(a, b), rtol=0, atol=1e-12)


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ValueError, match=r"2x3.*4x2"):
        matmul(np.zeros((2, 3)), np.zeros((4, 2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matmul_associative(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 6, size=4)
    a, b, c = (rng.normal(size=(n[i], n[i + 1])) for i in range(3))
    left = matmul(matmul(a, b), c)
    right = matmul(a, matmul(b, c))
    assert np.linalg.norm(left - right) <= 1e-9 * max(np.linalg.norm(left), 1.0)


def test_logsumexp_neg_examples():
    assert logsumexp_neg([0.0]) == 0.0
    K, c = 7, 2.5
    assert logsumexp_neg(np.full(K, c)) == pytest.approx(c - np.log(K), abs=1e-12)
    d = np.random.default_rng(2).normal(size=5)
    direct = -np.log(np.sum(np.exp(-d)))
    assert logsumexp_neg(d) == pytest.approx(direct, abs=1e-12)


def test_logsumexp_neg_no_overflow():
    assert logsumexp_neg([-1000.0, -1000.0]) == pytest.approx(-1000.0 - np.log(2))
    assert logsumexp_neg([1000.0, 2000.0]) == pytest.approx(1000.0)


@pytest.mark.parametrize("fn", [logsumexp_neg, softmax_neg])
def test_empty_vector_rejected(fn):
    with pytest.raises(ValueError):
        fn([])


@given(vectors, finite)
def test_logsumexp_shift(d, c):
    assert logsumexp_neg(d + c) == pytest.approx(logsumexp_neg(d) + c, abs=1e-12, rel=1e-14)


def test_softmax_neg_examples():
    np.testing.assert_allclose(softmax_neg(np.zeros(4)), 0.25, atol=1e-15)
    np.testing.assert_allclose(softmax_neg([0.0, np.log(3.0)]), [0.75, 0.25], atol=1e-15)


@given(vectors, finite)
def test_softmax_neg_properties(d, c):
    r = softmax_neg(d)
    assert (r >= 0).all() and (r <= 1).all()
    assert abs(r.sum() - 1) <= 1e-12
    np.testing.assert_allclose(softmax_neg(d + c), r, atol=1e-12)


def test_column_stats_examples():
    a = np.array([[0.0, 5.0], [2.0, 5.0]])
    mean, var = column_stats(a)
    np.testing.assert_array_equal(mean, [1.0, 5.0])
    np.testing.assert_array_equal(var, [1.0, 0.0])


def test_column_stats_two_pass_oracle():
    a = np.random.default_rng(3).normal(size=(128, 8)) * 3 + 1
    mean, var = column_stats(a)
    for j in range(8):
        m = sum(a[:, j]) / 128
        v = sum((x - m) ** 2 for x in a[:, j]) / 128
        assert mean[j] == pytest.approx(m, abs=1e-12)
        assert var[j] == pytest.approx(v, abs=1e-12)


def test_column_stats_needs_two_rows():
    with pytest.raises(ValueError):
        column_stats(np.zeros((1, 3)))


def test_correlation_examples():
    x = np.random.default_rng(4).normal(size=50)
    c = correlation_matrix(np.stack([x, x], axis=1), eps=1e-8)
    assert c[0, 1] == pytest.approx(1.0, abs=1e-6)
    c = correlation_matrix(np.stack([x, -x], axis=1), eps=1e-8)
    assert c[0, 1] == pytest.approx(-1.0, abs=1e-6)


def test_correlation_direct_oracle():
    a = np.random.default_rng(5).normal(size=(256, 4))
    eps = 1e-8
    c = correlation_matrix(a, eps)
    N = a.shape[0]
    for i in range(4):
        for j in range(4):
            mi, mj = a[:, i].mean(), a[:, j].mean()
            cov = np.sum((a[:, i] - mi) * (a[:, j] - mj)) / N
            vi = np.sum((a[:, i] - mi) ** 2) / N
            vj = np.sum((a[:, j] - mj) ** 2) / N
            assert c[i, j] == pytest.approx(cov / np.sqrt((vi + eps) * (vj + eps)), abs=1e-10)


def test_correlation_constant_column_is_zero():
    a = np.column_stack([np.ones(10), np.arange(10.0)])
    c = correlation_matrix(a)
    assert np.isfinite(c).all()
    assert c[0, 1] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 40), st.integers(1, 6))
def test_correlation_symmetric_and_bounded(seed, n, k):
    a = np.random.default_rng(seed).normal(size=(n, k))
    c = correlation_matrix(a)
    np.testing.assert_array_equal(c, c.T)
    assert (np.abs(c) <= 1 + 1e-9).all()


def test_rng_determinism():
    a, b = Rng(42), Rng(42)
    xs = [rng_uniform(a, 0, 1) for _ in range(50)] + [rng_normal(a) for _ in range(50)]
    ys = [rng_uniform(b, 0, 1) for _ in range(50)] + [rng_normal(b) for _ in range(50)]
    assert xs == ys
    assert Rng(1).uniform(size=10).tobytes() == Rng(1).uniform(size=10).tobytes()
    assert Rng(1).uniform(size=10).tobytes() != Rng(2).uniform(size=10).tobytes()


def test_rng_moments():
    u = Rng(7).uniform(0, 1, size=10**6)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01
    z = Rng(7).normal(size=10**6)
    assert abs(z.var() - 1) < 0.02
    assert abs(z.mean()) < 0.01


def test_rng_uniform_bounds_checked():
    with pytest.raises(ValueError):
        Rng(0).uniform(1.0, 1.0)


def test_rng_spawn_independent_and_reproducible():
    c1 = [r.uniform(size=5) for r in Rng(3).spawn(2)]
    c2 = [r.uniform(size=5) for r in Rng(3).spawn(2)]
    np.testing.assert_array_equal(c1[0], c2[0])
    assert not np.array_equal(c1[0], c1[1])
