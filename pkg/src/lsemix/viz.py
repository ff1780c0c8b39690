"""Weight-grid export as binary PPM (P6)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

SEPARATOR_GRAY = 128


def grid_shape(K: int, side: int, tiles_per_row: int, separator_px: int) -> tuple[int, int]:
    """(width, height) in pixels of a grid holding K square tiles."""
    cols = min(tiles_per_row, K)
    rows = math.ceil(K / tiles_per_row)
    return cols * side + (cols - 1) * separator_px, rows * side + (rows - 1) * separator_px


def diverging_rgb(v: np.ndarray) -> np.ndarray:
    """Map values in [-1, 1] to RGB: white at 0, blue at +1, red at -1."""
    v = np.clip(v, -1.0, 1.0)
    pos = np.maximum(v, 0.0)
    neg = np.maximum(-v, 0.0)
    rgb = np.empty(v.shape + (3,))
    rgb[..., 0] = 255.0 * (1.0 - pos)
    rgb[..., 1] = 255.0 * (1.0 - pos - neg)
    rgb[..., 2] = 255.0 * (1.0 - neg)
    return np.rint(rgb).astype(np.uint8)


def weight_grid_image(W: np.ndarray, tiles_per_row: int = 8, separator_px: int = 2) -> np.ndarray:
    """Height x width x 3 uint8 image; each row of W becomes one square tile.

    All tiles share one scale, the largest absolute weight in W.
    """
    W = np.asarray(W, dtype=np.float64)
    K, D = W.shape
    side = math.isqrt(D)
    if side * side != D:
        raise ValueError(f"row length {D} is not a square image")
    if tiles_per_row < 1 or separator_px < 0:
        raise ValueError("tiles_per_row must be >= 1 and separator_px >= 0")
    width, height = grid_shape(K, side, tiles_per_row, separator_px)
    img = np.full((height, width, 3), SEPARATOR_GRAY, dtype=np.uint8)
    scale = np.abs(W).max()
    normed = W / scale if scale > 0 else np.zeros_like(W)
    step = side + separator_px
    for k in range(K):
        r, c = divmod(k, tiles_per_row)
        tile = diverging_rgb(normed[k].reshape(side, side))
        img[r * step : r * step + side, c * step : c * step + side] = tile
    return img


def write_ppm(img: np.ndarray, path) -> Path:
    path = Path(path)
    height, width, _ = img.shape
    try:
        with open(path, "wb") as f:
            f.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
            f.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())
    except OSError as e:
        raise OSError(f"cannot write image {path}: {e}") from e
    return path


def read_ppm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    # exactly one whitespace byte separates the header from the raster
    body = raw[pos + 1 :]
    return np.frombuffer(body, dtype=np.uint8, count=width * height * 3).reshape(height, width, 3)


def export_weight_grid(W, path, tiles_per_row: int = 8, separator_px: int = 2) -> Path:
    return write_ppm(weight_grid_image(W, tiles_per_row, separator_px), path)
