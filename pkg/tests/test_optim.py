import math

import numpy as np
import pytest

from lsemix.optim import SGD, Adam, adam_step, make_optimizer, sgd_step


def test_sgd_zero_gradient_and_arithmetic():
    p = [np.array([1.0, 2.0])]
    sgd_step(SGD(0.1), p, [np.zeros(2)])
    np.testing.assert_array_equal(p[0], [1.0, 2.0])
    p = [np.array([1.0])]
    sgd_step(SGD(0.1), p, [np.array([2.0])])
    assert p[0][0] == pytest.approx(0.8, abs=1e-15)


def test_sgd_two_steps_compose():
    rng = np.random.default_rng(0)
    theta = rng.normal(size=(3, 2))
    g1, g2 = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    p = [theta.copy()]
    opt = SGD(0.05)
    opt.step(p, [g1])
    opt.step(p, [g2])
    np.testing.assert_array_equal(p[0], (theta - 0.05 * g1) - 0.05 * g2)


def test_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        SGD(0.1).step([np.zeros(3)], [np.zeros(2)])
    with pytest.raises(ValueError):
        Adam(0.1).step([np.zeros(3)], [np.zeros(3), np.zeros(1)])


def test_adam_zero_gradient_fresh_state():
    p = [np.array([0.5, -1.5])]
    opt = Adam(0.01)
    adam_step(opt, p, [np.zeros(2)])
    np.testing.assert_array_equal(p[0], [0.5, -1.5])
    assert opt.t == 1


def test_adam_first_step_is_signed_lr():
    g = np.array([1e-3, -0.5, 3.0, -1e-2])
    p = [np.zeros(4)]
    Adam(0.01).step(p, [g])
    np.testing.assert_allclose(p[0], -0.01 * np.sign(g), atol=1e-6)


def reference_adam(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        theta = theta - lr * mh / (math.sqrt(vh) + eps)
    return theta


def test_adam_ten_step_reference_trace():
    rng = np.random.default_rng(1)
    theta0 = rng.normal(size=5)
    grads = rng.normal(size=(10, 5))
    p = [theta0.copy()]
    opt = Adam(0.003)
    for g in grads:
        opt.step(p, [g])
    expected = [reference_adam(theta0[i], grads[:, i], 0.003) for i in range(5)]
    np.testing.assert_allclose(p[0], expected, rtol=0, atol=1e-12)
    assert opt.t == 10
    assert all((v >= 0).all() and np.isfinite(v).all() for v in opt.v)


def test_optimizers_deterministic():
    rng = np.random.default_rng(2)
    theta, grads = rng.normal(size=(4, 3)), rng.normal(size=(6, 4, 3))
    outs = []
    for _ in range(2):
        p = [theta.copy()]
        opt = Adam(0.01)
        for g in grads:
            opt.step(p, [g])
        outs.append(p[0].tobytes())
    assert outs[0] == outs[1]


def test_make_optimizer():
    assert isinstance(make_optimizer("sgd", 0.1), SGD)
    assert isinstance(make_optimizer("adam", 0.1), Adam)
    with pytest.raises(ValueError):
        make_optimizer("lbfgs", 0.1)
    with pytest.raises(ValueError):
        SGD(0.0)
