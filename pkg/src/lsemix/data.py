"""MNIST IDX loading and seeded minibatching."""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import Rng

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
DATA_DIR_ENV = "LSEMIX_DATA_DIR"


class IdxError(ValueError):
    """Base class for malformed IDX files."""


class IdxMagicError(IdxError):
    def __init__(self, path, found, expected):
        self.path, self.found, self.expected = str(path), found, expected
        super().__init__(
            f"{path}: magic at offset 0 is 0x{found:08x}, expected 0x{expected:08x}"
        )


class IdxTruncatedError(IdxError):
    def __init__(self, path, offset, expected, actual):
        self.path, self.offset, self.expected, self.actual = str(path), offset, expected, actual
        super().__init__(
            f"{path}: truncated at offset {offset}: expected {expected} bytes, found {actual}"
        )


class IdxSizeMismatchError(IdxError):
    def __init__(self, path, offset, expected, actual):
        self.path, self.offset, self.expected, self.actual = str(path), offset, expected, actual
        super().__init__(
            f"{path}: payload starting at offset {offset} should be {expected} bytes, "
            f"file has {actual}"
        )


class LabelRangeError(IdxError):
    def __init__(self, path, index, value):
        self.path, self.index, self.value = str(path), index, value
        super().__init__(f"{path}: label {value} at index {index} is outside 0..9")


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _parse(path, raw: bytes, magic: int, n_dims: int) -> tuple[tuple[int, ...], memoryview]:
    header = 4 + 4 * n_dims
    if len(raw) < 4:
        raise IdxTruncatedError(path, 0, header, len(raw))
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise IdxMagicError(path, found, magic)
    if len(raw) < header:
        raise IdxTruncatedError(path, 4, header, len(raw))
    dims = struct.unpack(">" + "I" * n_dims, raw[4:header])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = len(raw) - header
    if payload < expected:
        raise IdxTruncatedError(path, header, expected, payload)
    if payload > expected:
        raise IdxSizeMismatchError(path, header, expected, payload)
    return dims, memoryview(raw)[header:]


def load_idx_images(path) -> np.ndarray:
    """Images as an N x (rows*cols) float64 matrix scaled to [0, 1]."""
    raw = _read_bytes(path)
    (n, rows, cols), body = _parse(path, raw, IMAGE_MAGIC, 3)
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(n, rows * cols)
    return pixels.astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    (n,), body = _parse(path, raw, LABEL_MAGIC, 1)
    labels = np.frombuffer(body, dtype=np.uint8).astype(np.int64)
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise LabelRangeError(path, int(bad[0]), int(labels[bad[0]]))
    return labels


def write_idx_images(path, images_u8: np.ndarray):
    """Write a uint8 N x rows x cols array as an IDX image file (test fixtures)."""
    images_u8 = np.asarray(images_u8, dtype=np.uint8)
    n, rows, cols = images_u8.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(images_u8.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, labels.size))
        f.write(labels.tobytes())


@dataclass
class Dataset:
    images: np.ndarray  # N x 784, values in [0, 1]
    labels: np.ndarray  # N, values in 0..9

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self):
        return self.images.shape[0]

    def subset(self, n: int | None) -> "Dataset":
        if n is None or n >= len(self):
            return self
        return Dataset(self.images[:n], self.labels[:n])


_SPLIT_STEMS = {
    "train": ("train-images", "train-labels"),
    "test": ("t10k-images", "t10k-labels"),
}


def _find(data_dir: Path, stem: str, kind: str) -> Path:
    for sep in ("-", "."):
        for ext in ("", ".gz"):
            cand = data_dir / f"{stem}{sep}{kind}-ubyte{ext}"
            if cand.exists():
                return cand
    raise FileNotFoundError(f"no {stem} IDX file ({kind}) found in {data_dir}")


def resolve_data_dir(data_dir=None) -> Path:
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir is None:
        raise FileNotFoundError(f"no data directory given and ${DATA_DIR_ENV} is unset")
    return Path(data_dir)


def load_mnist(data_dir=None, split: str = "train") -> Dataset:
    d = resolve_data_dir(data_dir)
    img_stem, lbl_stem = _SPLIT_STEMS[split]
    images = load_idx_images(_find(d, img_stem, "idx3"))
    labels = load_idx_labels(_find(d, lbl_stem, "idx1"))
    return Dataset(images, labels)


def minibatches(ds_or_n, batch_size: int, rng: Rng) -> list[np.ndarray]:
    """Partition a seeded permutation into consecutive index slices.

    A trailing batch with fewer than 2 rows is dropped; batch statistics
    are undefined for it.
    """
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2, got {batch_size}")
    n = ds_or_n if isinstance(ds_or_n, (int, np.integer)) else len(ds_or_n)
    perm = rng.permutation(n)
    batches = [perm[i : i + batch_size] for i in range(0, n, batch_size)]
    if batches and len(batches[-1]) < 2:
        batches.pop()
    return batches
