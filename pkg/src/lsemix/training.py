"""Minibatch training loops for the theory encoder and the SAE baseline."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .data import minibatches
from .model import EncoderParams, SaeParams, init_encoder, init_sae
from .numerics import Rng
from .objective import LossBreakdown, ObjectiveConfig, full_loss_grad, sae_loss_grad
from .optim import make_optimizer


class NonFiniteLossError(FloatingPointError):
    def __init__(self, epoch, term, value):
        self.epoch, self.term, self.value = epoch, term, value
        super().__init__(f"non-finite loss term '{term}' ({value}) in epoch {epoch}")


def _check_finite(epoch, values: dict):
    for term, v in values.items():
        if not math.isfinite(v):
            raise NonFiniteLossError(epoch, term, v)


def train_encoder(
    X: np.ndarray,
    obj: ObjectiveConfig,
    *,
    K: int,
    epochs: int,
    batch_size: int,
    optimizer: str,
    lr: float,
    seed: int,
    on_epoch: Callable[[int, dict], None] | None = None,
) -> tuple[EncoderParams, list[LossBreakdown]]:
    """Train the theory encoder; returns the parameters and per-epoch mean losses."""
    init_rng, batch_rng = Rng(seed).spawn(2)
    params = init_encoder(init_rng, X.shape[1], K)
    opt = make_optimizer(optimizer, lr)
    history = []
    fields = ("lse", "var", "tc", "wr", "total")
    for epoch in range(1, epochs + 1):
        sums = dict.fromkeys(fields, 0.0)
        batches = minibatches(X.shape[0], batch_size, batch_rng)
        for idx in batches:
            br, gW, gb = full_loss_grad(params, X[idx], obj)
            for f in fields:
                sums[f] += getattr(br, f)
            opt.step([params.W, params.b], [gW, gb])
        means = {f: sums[f] / len(batches) for f in fields}
        _check_finite(epoch, means)
        if not (np.isfinite(params.W).all() and np.isfinite(params.b).all()):
            raise NonFiniteLossError(epoch, "params", float("nan"))
        history.append(LossBreakdown(**means))
        if on_epoch is not None:
            on_epoch(epoch, means)
    return params, history


def train_sae(
    X: np.ndarray,
    l1_weight: float,
    *,
    l1_reduction: str = "sum",
    K: int,
    epochs: int,
    batch_size: int,
    optimizer: str,
    lr: float,
    seed: int,
    on_epoch: Callable[[int, dict], None] | None = None,
) -> tuple[SaeParams, list[dict]]:
    init_rng, batch_rng = Rng(seed).spawn(2)
    params = init_sae(init_rng, X.shape[1], K)
    opt = make_optimizer(optimizer, lr)
    history = []
    for epoch in range(1, epochs + 1):
        sums = {"mse": 0.0, "l1": 0.0, "total": 0.0}
        batches = minibatches(X.shape[0], batch_size, batch_rng)
        for idx in batches:
            losses, grads = sae_loss_grad(params, X[idx], l1_weight, l1_reduction)
            for k in sums:
                sums[k] += losses[k]
            opt.step(params.blocks(), grads)
        means = {k: v / len(batches) for k, v in sums.items()}
        _check_finite(epoch, means)
        history.append(means)
        if on_epoch is not None:
            on_epoch(epoch, means)
    return params, history
