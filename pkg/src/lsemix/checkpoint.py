"""LSEMIX01 binary checkpoints.

Layout (all little-endian):

    offset 0   8 bytes   magic b"LSEMIX01"
    offset 8   1 byte    model kind: 0 = theory encoder, 1 = SAE
    offset 9   4 bytes   D (uint32)
    offset 13  4 bytes   K (uint32)
    offset 17  ...       float64 blocks, row-major:
                         theory: W (K x D), b (K)
                         SAE:    W_enc (K x D), b_enc (K), W_dec (D x K), b_dec (D)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import EncoderParams, SaeParams

MAGIC = b"LSEMIX01"
HEADER_SIZE = 8 + 1 + 8
KIND_CODES = {"theory": 0, "sae": 1}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}


class CheckpointError(ValueError):
    pass


class CheckpointFormatError(CheckpointError):
    def __init__(self, path, field, detail):
        self.path, self.field = str(path), field
        super().__init__(f"{path}: bad checkpoint field '{field}': {detail}")


class CheckpointTruncatedError(CheckpointError):
    def __init__(self, path, expected, actual):
        self.path, self.expected, self.actual = str(path), expected, actual
        super().__init__(f"{path}: truncated checkpoint, expected {expected} bytes, got {actual}")


def _layout(kind: str, D: int, K: int) -> list[tuple[str, tuple[int, ...]]]:
    if kind == "theory":
        return [("W", (K, D)), ("b", (K,))]
    return [("W_enc", (K, D)), ("b_enc", (K,)), ("W_dec", (D, K)), ("b_dec", (D,))]


def checkpoint_size(kind: str, D: int, K: int) -> int:
    return HEADER_SIZE + 8 * sum(int(np.prod(s)) for _, s in _layout(kind, D, K))


def save_checkpoint(params, path) -> Path:
    path = Path(path)
    if isinstance(params, EncoderParams):
        kind, blocks = "theory", params.blocks()
    elif isinstance(params, SaeParams):
        kind, blocks = "sae", params.blocks()
    else:
        raise TypeError(f"cannot checkpoint {type(params).__name__}")
    header = MAGIC + struct.pack("<BII", KIND_CODES[kind], params.D, params.K)
    body = b"".join(np.ascontiguousarray(blk, dtype="<f8").tobytes() for blk in blocks)
    try:
        path.write_bytes(header + body)
    except OSError as e:
        raise OSError(f"cannot write checkpoint {path}: {e}") from e
    return path


def load_checkpoint(path):
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_SIZE:
        if raw[: len(MAGIC)] != MAGIC[: len(raw)]:
            raise CheckpointFormatError(path, "magic", f"found {raw[:8]!r}")
        raise CheckpointTruncatedError(path, HEADER_SIZE, len(raw))
    if raw[:8] != MAGIC:
        if raw[:6] == MAGIC[:6]:
            raise CheckpointFormatError(path, "version", f"found {raw[:8]!r}, expected {MAGIC!r}")
        raise CheckpointFormatError(path, "magic", f"found {raw[:8]!r}, expected {MAGIC!r}")
    code, D, K = struct.unpack("<BII", raw[8:HEADER_SIZE])
    if code not in KIND_NAMES:
        raise CheckpointFormatError(path, "kind", f"unknown model kind byte {code}")
    if D < 1 or K < 1:
        raise CheckpointFormatError(path, "dims", f"D={D}, K={K}")
    kind = KIND_NAMES[code]
    expected = checkpoint_size(kind, D, K)
    if len(raw) < expected:
        raise CheckpointTruncatedError(path, expected, len(raw))
    if len(raw) > expected:
        raise CheckpointFormatError(path, "size", f"{len(raw) - expected} trailing bytes")

    blocks = []
    offset = HEADER_SIZE
    for _, shape in _layout(kind, D, K):
        n = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype="<f8", count=n, offset=offset).astype(np.float64)
        blocks.append(arr.reshape(shape))
        offset += 8 * n
    if kind == "theory":
        return EncoderParams(*blocks)
    return SaeParams(*blocks)
