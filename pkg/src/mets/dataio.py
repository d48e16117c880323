"""Matrix files and a synthetic two-parameter image manifold.

Binary matrix layout: 4-byte magic ``MET1``, uint32 rows, uint32 cols, then
``rows * cols`` little-endian float64 values in row-major order. Files whose
name ends in ``.csv`` are read and written as plain comma-separated text.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .extension import TimeSeriesSet

__all__ = [
    "MAGIC",
    "MatrixFormatError",
    "read_matrix",
    "write_matrix",
    "SyntheticSpec",
    "SyntheticData",
    "render_blobs",
    "generate_synthetic",
]

MAGIC = b"MET1"
_HEADER = struct.Struct("<4sII")
_U32_MAX = 2**32 - 1


class MatrixFormatError(ValueError):
    pass


def _is_csv(path) -> bool:
    return os.fspath(path).lower().endswith(".csv")


def write_matrix(path, matrix) -> None:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise MatrixFormatError("expected a 2-D matrix, got shape %s" % (arr.shape,))
    if not np.all(np.isfinite(arr)):
        raise MatrixFormatError("matrix contains non-finite values")
    rows, cols = arr.shape
    if rows > _U32_MAX or cols > _U32_MAX:
        raise MatrixFormatError("dimensions %dx%d exceed uint32" % (rows, cols))
    if _is_csv(path):
        with open(path, "w", newline="") as fh:
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
        return
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(arr.astype("<f8", copy=False).tobytes(order="C"))


def _read_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise MatrixFormatError("%s:%d: %s" % (path, lineno, exc)) from None
    if not rows:
        raise MatrixFormatError("%s: empty CSV file" % (path,))
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise MatrixFormatError("%s: ragged rows with widths %s" % (path, sorted(widths)))
    arr = np.array(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise MatrixFormatError("%s: non-finite value" % (path,))
    return arr


def read_matrix(path) -> np.ndarray:
    if _is_csv(path):
        return _read_csv(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise MatrixFormatError("%s: file too short for header (%d bytes)" % (path, len(blob)))
    magic, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MatrixFormatError("%s: bad magic %r, expected %r" % (path, magic, MAGIC))
    expected = rows * cols * 8
    actual = len(blob) - _HEADER.size
    if actual != expected:
        raise MatrixFormatError("%s: payload for %dx%d needs %d bytes, found %d"
                                % (path, rows, cols, expected, actual))
    arr = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise MatrixFormatError("%s: non-finite value in payload" % (path,))
    return arr.astype(float)


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-blob image manifold parameterized by the blob center.

    Training images sample a uniform grid over the unit parameter square,
    visited in serpentine order so consecutive indices are grid neighbors.
    Test images follow a closed Lissajous curve whose phase depends on the
    seed.
    """

    height: int = 24
    width: int = 24
    blob_width: float = 2.5
    n: int = 900
    N: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.N < 2:
            raise ValueError("need n >= 2 and N >= 2")
        if self.blob_width <= 0:
            raise ValueError("blob_width must be positive")
        if 2 * self.blob_width >= min(self.height, self.width) / 2:
            raise ValueError("blob of width %g does not fit a %dx%d image"
                             % (self.blob_width, self.height, self.width))


@dataclass(frozen=True)
class SyntheticData:
    training: np.ndarray
    training_timestamps: np.ndarray
    test: TimeSeriesSet
    test_params: np.ndarray
    training_params: np.ndarray


def _pixel_centers(params, spec):
    # parameter square maps to the image interior, two blob widths from each edge
    margin = 2.0 * spec.blob_width
    r = margin + params[:, 1] * (spec.height - 1 - 2 * margin)
    c = margin + params[:, 0] * (spec.width - 1 - 2 * margin)
    return r, c


def render_blobs(params, spec: SyntheticSpec) -> np.ndarray:
    """Row-major flattened blob images, one row per parameter pair."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    r, c = _pixel_centers(params, spec)
    rr = np.arange(spec.height, dtype=float)
    cc = np.arange(spec.width, dtype=float)
    gr = np.exp(-((rr[None, :] - r[:, None]) ** 2) / (2 * spec.blob_width**2))
    gc = np.exp(-((cc[None, :] - c[:, None]) ** 2) / (2 * spec.blob_width**2))
    imgs = gr[:, :, None] * gc[:, None, :]
    return imgs.reshape(params.shape[0], -1)


def _grid_params(n):
    nx = int(round(math.sqrt(n)))
    ny = int(math.ceil(n / nx))
    gx = np.linspace(0.0, 1.0, nx)
    gy = np.linspace(0.0, 1.0, ny)
    pts = []
    for row, y in enumerate(gy):
        xs = gx if row % 2 == 0 else gx[::-1]
        pts.extend((x, y) for x in xs)
    return np.array(pts[:n])


def _curve_params(N, seed):
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2 * np.pi)
    t = 2 * np.pi * np.arange(N) / N
    x = 0.5 + 0.35 * np.sin(t + phase)
    y = 0.5 + 0.35 * np.sin(2 * t)
    return np.column_stack([x, y])


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticData:
    """Training grid, clean test sequence and their ground-truth parameters."""
    train_params = _grid_params(spec.n)
    test_params = _curve_params(spec.N, spec.seed)
    training = render_blobs(train_params, spec)
    test = TimeSeriesSet(render_blobs(test_params, spec), np.arange(spec.N))
    return SyntheticData(training, np.arange(spec.n), test, test_params, train_params)
