"""Loss terms and their analytic gradients.

Conventions: ``lse_loss_grad`` averages the LSE term over the batch. Inside
the full objective, ``ObjectiveConfig.lse_reduction`` picks between that mean
and the per-batch sum ("sum" multiplies both loss and gradient by B). The
variance and decorrelation penalties are batch statistics computed once per
batch and added without averaging. All penalties act on the post-ReLU
distances.

The reduction matters: with the mean, the LSE gradient is B times weaker
than the penalties and training drifts toward hard, dense assignments.
Experiment configs default to "sum".
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import EncoderParams, SaeParams, encoder_forward, sae_encode
from .numerics import as_matrix, logsumexp_neg_rows, softmax_neg_rows


@dataclass(frozen=True)
class ObjectiveConfig:
    lambda_var: float = 1.0
    lambda_tc: float = 1.0
    lambda_wr: float = 0.0
    eps_var: float = 1e-8
    eps_corr: float = 1e-8
    enable_lse: bool = True
    enable_var: bool = True
    enable_tc: bool = True
    lse_reduction: str = "mean"

    def __post_init__(self):
        if self.lse_reduction not in ("mean", "sum"):
            raise ValueError(f"lse_reduction must be 'mean' or 'sum', got {self.lse_reduction!r}")
        for name in ("lambda_var", "lambda_tc", "lambda_wr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("eps_var", "eps_corr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class LossBreakdown:
    lse: float
    var: float
    tc: float
    wr: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def _require_batch(Dact, what):
    if Dact.shape[0] < 2:
        raise ValueError(f"{what} needs a batch of at least 2 rows, got {Dact.shape[0]}")


def lse_loss_grad(Dact: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch-mean LSE loss; the gradient is the responsibility matrix over B."""
    Dact = as_matrix(Dact, "Dact")
    B = Dact.shape[0]
    loss = float(logsumexp_neg_rows(Dact).mean())
    return loss, softmax_neg_rows(Dact) / B


def variance_penalty_grad(Dact: np.ndarray, cfg: ObjectiveConfig) -> tuple[float, np.ndarray]:
    Dact = as_matrix(Dact, "Dact")
    _require_batch(Dact, "variance penalty")
    B = Dact.shape[0]
    centered = Dact - Dact.mean(axis=0)
    denom = (centered**2).mean(axis=0) + cfg.eps_var
    loss = float(-np.log(denom).sum())
    grad = -(2.0 / B) * centered / denom
    return loss, grad


def decorrelation_penalty_grad(Dact: np.ndarray, cfg: ObjectiveConfig) -> tuple[float, np.ndarray]:
    """Sum of squared off-diagonal correlations and its gradient.

    With S = Ac^T Ac / B and s_i = sqrt(S_ii + eps), C = S / (s s^T). For
    G = dL/dC = 2 C (off-diagonal only), dL/dS has off-diagonal part
    G_ij / (s_i s_j) and diagonal correction -sum_k G_ik C_ik / s_i^2.
    Centering needs no extra term because Ac already has zero column means.
    """
    Dact = as_matrix(Dact, "Dact")
    _require_batch(Dact, "decorrelation penalty")
    B, K = Dact.shape
    Ac = Dact - Dact.mean(axis=0)
    S = Ac.T @ Ac / B
    S = 0.5 * (S + S.T)
    s = np.sqrt(np.diag(S) + cfg.eps_corr)
    C = S / np.outer(s, s)
    off = ~np.eye(K, dtype=bool)
    C_off = np.where(off, C, 0.0)
    loss = float((C_off**2).sum())

    G = 2.0 * C_off
    H = G / np.outer(s, s)
    H[np.diag_indices(K)] = -(G * C).sum(axis=1) / s**2
    grad = (2.0 / B) * (Ac @ H)
    return loss, grad


def weight_reg_grad(W: np.ndarray, lambda_wr: float) -> tuple[float, np.ndarray]:
    W = as_matrix(W, "W")
    E = W.T @ W - np.eye(W.shape[1])
    loss = float(lambda_wr * (E**2).sum())
    return loss, 4.0 * lambda_wr * (W @ E)


def distance_loss_grad(Dact: np.ndarray, cfg: ObjectiveConfig) -> tuple[dict, np.ndarray]:
    """Enabled distance terms and the weighted gradient with respect to Dact."""
    terms = {"lse": 0.0, "var": 0.0, "tc": 0.0}
    grad = np.zeros_like(Dact)
    if cfg.enable_lse:
        terms["lse"], g = lse_loss_grad(Dact)
        if cfg.lse_reduction == "sum":
            terms["lse"] *= Dact.shape[0]
            g = g * Dact.shape[0]
        grad += g
    if cfg.enable_var:
        terms["var"], g = variance_penalty_grad(Dact, cfg)
        grad += cfg.lambda_var * g
    if cfg.enable_tc:
        terms["tc"], g = decorrelation_penalty_grad(Dact, cfg)
        grad += cfg.lambda_tc * g
    return terms, grad


def _total(terms: dict, wr: float, cfg: ObjectiveConfig) -> float:
    total = 0.0
    if cfg.enable_lse:
        total += terms["lse"]
    if cfg.enable_var:
        total += cfg.lambda_var * terms["var"]
    if cfg.enable_tc:
        total += cfg.lambda_tc * terms["tc"]
    return total + wr


def full_loss_grad(
    p: EncoderParams, X: np.ndarray, cfg: ObjectiveConfig
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Full objective on a batch; returns the breakdown and (gradW, gradb)."""
    cache = encoder_forward(p, X)
    X = as_matrix(X, "X")
    terms, gradD = distance_loss_grad(cache.Dact, cfg)
    gradZ = np.where(cache.Z > 0, gradD, 0.0)
    gradW = gradZ.T @ X
    gradb = gradZ.sum(axis=0)
    wr = 0.0
    if cfg.lambda_wr > 0:
        wr, gW = weight_reg_grad(p.W, cfg.lambda_wr)
        gradW += gW
    breakdown = LossBreakdown(
        lse=terms["lse"], var=terms["var"], tc=terms["tc"], wr=wr,
        total=_total(terms, wr, cfg),
    )
    return breakdown, gradW, gradb


def full_loss(p: EncoderParams, X: np.ndarray, cfg: ObjectiveConfig) -> float:
    return full_loss_grad(p, X, cfg)[0].total


def sae_loss_grad(
    p: SaeParams, X: np.ndarray, l1_weight: float, l1_reduction: str = "sum"
) -> tuple[dict, list[np.ndarray]]:
    """MSE + L1 loss of the baseline SAE.

    Returns ``({"mse", "l1", "total"}, [gW_enc, gb_enc, gW_dec, gb_dec])``.
    The MSE averages over batch and pixels. The L1 term averages over the
    batch and either sums (``l1_reduction="sum"``) or averages ("mean") over
    units. The L1 subgradient at zero activation is taken as zero.
    """
    if l1_reduction not in ("sum", "mean"):
        raise ValueError(f"l1_reduction must be 'sum' or 'mean', got {l1_reduction!r}")
    X = as_matrix(X, "X")
    Z, A = sae_encode(p, X)
    X_hat = A @ p.W_dec.T + p.b_dec
    B, D = X.shape
    resid = X_hat - X
    mse = float((resid**2).mean())
    coef = l1_weight if l1_reduction == "sum" else l1_weight / A.shape[1]
    l1 = float(coef * A.sum(axis=1).mean())

    g_hat = (2.0 / (B * D)) * resid
    gW_dec = g_hat.T @ A
    gb_dec = g_hat.sum(axis=0)
    gA = g_hat @ p.W_dec + coef / B
    gZ = np.where(Z > 0, gA, 0.0)
    gW_enc = gZ.T @ X
    gb_enc = gZ.sum(axis=0)
    return {"mse": mse, "l1": l1, "total": mse + l1}, [gW_enc, gb_enc, gW_dec, gb_dec]
