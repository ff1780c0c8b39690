"""Dense float64 helpers, stable reductions, batch statistics and the seeded PRNG.

Matrices are plain two-dimensional ``numpy.float64`` arrays in C (row-major)
order. The functions here add the shape checks and numerically stable
formulations the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np

DTYPE = np.float64


def as_matrix(a, name="matrix") -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=DTYPE)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformability check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"matmul dimension mismatch: a is {a.shape[0]}x{a.shape[1]}, "
            f"b is {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def _check_vector(d) -> np.ndarray:
    d = np.asarray(d, dtype=DTYPE)
    if d.size == 0:
        raise ValueError("empty distance vector")
    return d


def logsumexp_neg(d) -> float:
    """Return ``-log(sum(exp(-d)))`` for a 1-D vector, shifted by ``min(d)``."""
    d = _check_vector(d).ravel()
    m = d.min()
    return float(m - np.log(np.exp(-(d - m)).sum()))


def softmax_neg(d) -> np.ndarray:
    """Softmax of the negated vector, ``exp(-d_j) / sum_k exp(-d_k)``."""
    d = _check_vector(d).ravel()
    e = np.exp(-(d - d.min()))
    return e / e.sum()


def logsumexp_neg_rows(D: np.ndarray) -> np.ndarray:
    """Row-wise :func:`logsumexp_neg` for a B x K matrix."""
    D = np.asarray(D, dtype=DTYPE)
    if D.shape[-1] == 0:
        raise ValueError("empty distance rows")
    m = D.min(axis=1, keepdims=True)
    return (m - np.log(np.exp(-(D - m)).sum(axis=1, keepdims=True)))[:, 0]


def softmax_neg_rows(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=DTYPE)
    if D.shape[-1] == 0:
        raise ValueError("empty distance rows")
    e = np.exp(-(D - D.min(axis=1, keepdims=True)))
    return e / e.sum(axis=1, keepdims=True)


def column_stats(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population variance (divisor N)."""
    a = as_matrix(a)
    if a.shape[0] < 2:
        raise ValueError(f"column_stats needs at least 2 rows, got {a.shape[0]}")
    mean = a.mean(axis=0)
    var = ((a - mean) ** 2).mean(axis=0)
    return mean, var


def correlation_matrix(a: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Column correlation with ``eps`` added to each variance in the denominator.

    Constant columns come out with (near) zero correlation instead of NaN.
    """
    a = as_matrix(a)
    if a.shape[0] < 2:
        raise ValueError(f"correlation_matrix needs at least 2 rows, got {a.shape[0]}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    centered = a - a.mean(axis=0)
    cov = centered.T @ centered / a.shape[0]
    s = np.sqrt(np.diag(cov) + eps)
    corr = cov / np.outer(s, s)
    # symmetrize to remove round-off asymmetry from the BLAS kernel
    return 0.5 * (corr + corr.T)


class Rng:
    """Seeded generator backed by numpy's PCG64 bit generator.

    Uniform draws use ``Generator.random`` (53-bit doubles); normal draws use
    numpy's ziggurat ``standard_normal``. Child generators for parallel
    workers come from ``SeedSequence.spawn``, so they never share a stream.
    """

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def uniform(self, lo=0.0, hi=1.0, size=None):
        if not lo < hi:
            raise ValueError(f"uniform bounds must satisfy lo < hi, got [{lo}, {hi})")
        u = self._gen.random(size)
        return lo + (hi - lo) * u

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def spawn(self, n: int) -> list["Rng"]:
        return [Rng(s) for s in self._seq.spawn(n)]


def rng_uniform(rng: Rng, lo: float, hi: float) -> float:
    return float(rng.uniform(lo, hi))


def rng_normal(rng: Rng) -> float:
    return float(rng.normal())
