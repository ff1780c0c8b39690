"""Plain SGD and bias-corrected Adam over lists of numpy parameter blocks.

Both update the parameter arrays in place and return them.
"""

from __future__ import annotations

import numpy as np


def _check_shapes(params, grads):
    if len(params) != len(grads):
        raise ValueError(f"got {len(params)} parameter blocks but {len(grads)} gradients")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != np.shape(g):
            raise ValueError(f"block {i}: parameter shape {p.shape} != gradient shape {np.shape(g)}")


class SGD:
    def __init__(self, lr: float):
        if not lr > 0:
            raise ValueError("lr must be > 0")
        self.lr = lr

    def step(self, params, grads):
        _check_shapes(params, grads)
        for p, g in zip(params, grads):
            p -= self.lr * g
        return params


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not lr > 0:
            raise ValueError("lr must be > 0")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        _check_shapes(params, grads)
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        else:
            for i, p in enumerate(params):
                if self.m[i].shape != p.shape:
                    raise ValueError(f"block {i}: moment shape {self.m[i].shape} != parameter shape {p.shape}")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r} (expected 'sgd' or 'adam')")


def sgd_step(state: SGD, params, grads):
    return state.step(params, grads)


def adam_step(state: Adam, params, grads):
    return state.step(params, grads)
