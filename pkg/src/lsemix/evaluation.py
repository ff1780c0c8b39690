"""Representation metrics, the linear probe and reconstruction error."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .numerics import as_matrix, column_stats, correlation_matrix
from .optim import Adam


@dataclass
class RepMetrics:
    dead_units: int
    dead_fraction: float
    redundancy: float | None  # None when fewer than two units are alive
    resp_entropy: float
    l0_density: float
    l0_mean_active: float

    def to_dict(self) -> dict:
        return asdict(self)


def offdiag_sq_sum(corr: np.ndarray) -> float:
    off = corr.copy()
    np.fill_diagonal(off, 0.0)
    return float((off**2).sum())


def rep_metrics(acts: np.ndarray, resp: np.ndarray, dead_threshold: float = 0.01) -> RepMetrics:
    acts = as_matrix(acts, "acts")
    resp = as_matrix(resp, "resp")
    if acts.shape[0] < 2:
        raise ValueError(f"rep_metrics needs at least 2 rows, got {acts.shape[0]}")
    if resp.shape != acts.shape:
        raise ValueError(f"resp shape {resp.shape} != acts shape {acts.shape}")
    K = acts.shape[1]
    _, var = column_stats(acts)
    alive = var >= dead_threshold
    dead = int(K - alive.sum())

    redundancy = None
    if alive.sum() >= 2:
        # live columns have variance >= dead_threshold; no eps guard needed
        corr = correlation_matrix(acts[:, alive], eps=np.finfo(np.float64).tiny)
        redundancy = offdiag_sq_sum(corr)

    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(resp > 0, resp * np.log(resp), 0.0)
    entropy = float(-plogp.sum(axis=1).mean())

    active = acts > 0
    return RepMetrics(
        dead_units=dead,
        dead_fraction=dead / K,
        redundancy=redundancy,
        resp_entropy=entropy,
        l0_density=float(active.mean()),
        l0_mean_active=float(active.sum(axis=1).mean()),
    )


def reconstruction_mse(X: np.ndarray, X_hat: np.ndarray) -> float:
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise ValueError(f"shape mismatch: X is {X.shape}, X_hat is {X_hat.shape}")
    return float(((X_hat - X) ** 2).mean())


@dataclass(frozen=True)
class ProbeConfig:
    n_classes: int = 10
    l2: float = 1e-4
    lr: float = 0.01
    max_iter: int = 500
    tol: float = 1e-7
    standardize: bool = True


@dataclass
class ProbeResult:
    accuracy: float
    weights: np.ndarray  # n_classes x F, in standardized feature space
    bias: np.ndarray
    iterations: int
    train_accuracy: float = float("nan")


def _softmax_rows(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def train_linear_probe(
    train_feats, train_labels, test_feats, test_labels, cfg: ProbeConfig = ProbeConfig()
) -> ProbeResult:
    """Multinomial logistic regression fitted by full-batch Adam.

    Objective: mean cross-entropy + ``l2 * ||W||^2``. Stops after
    ``max_iter`` steps or once the loss improves by less than ``tol``.
    Starts from zero weights, so the result is fully deterministic.
    """
    Xtr = as_matrix(train_feats, "train_feats")
    Xte = as_matrix(test_feats, "test_feats")
    ytr = np.asarray(train_labels, dtype=np.int64)
    yte = np.asarray(test_labels, dtype=np.int64)
    if Xtr.shape[0] == 0 or Xte.shape[0] == 0:
        raise ValueError("probe needs non-empty train and test sets")
    if Xtr.shape[1] != Xte.shape[1]:
        raise ValueError("train and test features differ in width")
    if not (np.isfinite(Xtr).all() and np.isfinite(Xte).all()):
        raise ValueError("probe features must be finite")
    if cfg.standardize:
        mu = Xtr.mean(axis=0)
        sd = Xtr.std(axis=0)
        sd = np.where(sd > 1e-12, sd, 1.0)
        Xtr = (Xtr - mu) / sd
        Xte = (Xte - mu) / sd

    N, F = Xtr.shape
    C = cfg.n_classes
    onehot = np.zeros((N, C))
    onehot[np.arange(N), ytr] = 1.0
    W = np.zeros((C, F))
    b = np.zeros(C)
    opt = Adam(cfg.lr)
    prev = np.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        P = _softmax_rows(Xtr @ W.T + b)
        loss = -np.log(P[np.arange(N), ytr] + 1e-300).mean() + cfg.l2 * (W**2).sum()
        if prev - loss < cfg.tol:
            break
        prev = loss
        G = (P - onehot) / N
        opt.step([W, b], [G.T @ Xtr + 2.0 * cfg.l2 * W, G.sum(axis=0)])

    acc = float(((Xte @ W.T + b).argmax(axis=1) == yte).mean())
    tr_acc = float(((Xtr @ W.T + b).argmax(axis=1) == ytr).mean())
    return ProbeResult(accuracy=acc, weights=W, bias=b, iterations=it, train_accuracy=tr_acc)
