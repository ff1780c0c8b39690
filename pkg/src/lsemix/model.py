"""Parameter containers and forward passes.

``EncoderParams`` is the whole theory-derived model: one linear layer whose
ReLU outputs are read as distances to K components. ``SaeParams`` is the
untied encoder/decoder baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import Rng, as_matrix, softmax_neg_rows

ACTIVATIONS = ("relu",)


@dataclass
class EncoderParams:
    W: np.ndarray  # K x D
    b: np.ndarray  # K

    def __post_init__(self):
        self.W = as_matrix(self.W, "W")
        self.b = np.ascontiguousarray(self.b, dtype=np.float64).ravel()
        if self.W.shape[0] < 1 or self.W.shape[1] < 1:
            raise ValueError(f"W must be at least 1x1, got {self.W.shape}")
        if self.b.shape != (self.W.shape[0],):
            raise ValueError(f"b has length {self.b.size}, expected {self.W.shape[0]}")

    @property
    def K(self) -> int:
        return self.W.shape[0]

    @property
    def D(self) -> int:
        return self.W.shape[1]

    def blocks(self) -> list[np.ndarray]:
        return [self.W, self.b]

    def n_params(self) -> int:
        return self.W.size + self.b.size


@dataclass
class ForwardCache:
    Z: np.ndarray  # pre-activations, B x K
    Dact: np.ndarray  # distances ReLU(Z), B x K


@dataclass
class SaeParams:
    W_enc: np.ndarray  # K x D
    b_enc: np.ndarray  # K
    W_dec: np.ndarray  # D x K
    b_dec: np.ndarray  # D

    def __post_init__(self):
        self.W_enc = as_matrix(self.W_enc, "W_enc")
        self.W_dec = as_matrix(self.W_dec, "W_dec")
        self.b_enc = np.ascontiguousarray(self.b_enc, dtype=np.float64).ravel()
        self.b_dec = np.ascontiguousarray(self.b_dec, dtype=np.float64).ravel()
        K, D = self.W_enc.shape
        if self.W_dec.shape != (D, K):
            raise ValueError(f"W_dec is {self.W_dec.shape}, expected {(D, K)}")
        if self.b_enc.shape != (K,) or self.b_dec.shape != (D,):
            raise ValueError("bias lengths do not match weight shapes")

    @property
    def K(self) -> int:
        return self.W_enc.shape[0]

    @property
    def D(self) -> int:
        return self.W_enc.shape[1]

    def blocks(self) -> list[np.ndarray]:
        return [self.W_enc, self.b_enc, self.W_dec, self.b_dec]

    def n_params(self) -> int:
        return sum(p.size for p in self.blocks())

    def encoder_params(self) -> int:
        return self.W_enc.size + self.b_enc.size


def encoder_param_count(D: int, K: int) -> int:
    return K * D + K


def sae_param_count(D: int, K: int) -> int:
    return 2 * K * D + K + D


def _check_dims(D: int, K: int):
    if D < 1 or K < 1:
        raise ValueError(f"D and K must be >= 1, got D={D}, K={K}")


def init_encoder(rng: Rng, D: int, K: int) -> EncoderParams:
    """Uniform init on [-1/sqrt(D), 1/sqrt(D)] for both W and b."""
    _check_dims(D, K)
    bound = 1.0 / np.sqrt(D)
    W = rng.uniform(-bound, bound, size=(K, D))
    b = rng.uniform(-bound, bound, size=K)
    return EncoderParams(W, b)


def _check_input(X, D: int) -> np.ndarray:
    X = as_matrix(X, "X")
    if X.shape[1] != D:
        raise ValueError(f"input has {X.shape[1]} columns, model expects D={D}")
    return X


def encoder_forward(p: EncoderParams, X: np.ndarray) -> ForwardCache:
    X = _check_input(X, p.D)
    Z = X @ p.W.T + p.b
    return ForwardCache(Z=Z, Dact=np.maximum(Z, 0.0))


def responsibilities(Dact: np.ndarray) -> np.ndarray:
    """Per-row softmax over negated distances."""
    return softmax_neg_rows(as_matrix(Dact, "Dact"))


def pseudo_reconstruct(p: EncoderParams, Dact: np.ndarray) -> np.ndarray:
    """Reconstruct through the encoder transpose; there is no decoder bias."""
    Dact = as_matrix(Dact, "Dact")
    if Dact.shape[1] != p.K:
        raise ValueError(f"Dact has {Dact.shape[1]} columns, expected K={p.K}")
    return Dact @ p.W


def init_sae(rng: Rng, D: int, K: int) -> SaeParams:
    _check_dims(D, K)
    enc = 1.0 / np.sqrt(D)
    dec = 1.0 / np.sqrt(K)
    W_enc = rng.uniform(-enc, enc, size=(K, D))
    b_enc = rng.uniform(-enc, enc, size=K)
    W_dec = rng.uniform(-dec, dec, size=(D, K))
    b_dec = rng.uniform(-dec, dec, size=D)
    return SaeParams(W_enc, b_enc, W_dec, b_dec)


def sae_encode(p: SaeParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (pre-activations, activations) of the SAE encoder."""
    X = _check_input(X, p.D)
    Z = X @ p.W_enc.T + p.b_enc
    return Z, np.maximum(Z, 0.0)


def sae_forward(p: SaeParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    _, A = sae_encode(p, X)
    X_hat = A @ p.W_dec.T + p.b_dec
    return A, X_hat
