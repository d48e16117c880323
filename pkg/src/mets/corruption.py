"""Image noise and artifact models on intensities in [0, 1].

Every operation is a pure function of its input and an integer seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "NoiseSpec",
    "NOISE_KINDS",
    "DEFAULT_NOISE_GRIDS",
    "N_INSTANCES",
    "salt_pepper",
    "gaussian_noise",
    "motion_blur_kernel",
    "sample_blur_length",
    "motion_blur",
    "corrupt_image",
    "corrupt_dataset",
    "instance_seeds",
]

NOISE_KINDS = ("salt-pepper", "gaussian", "motion-blur")

DEFAULT_NOISE_GRIDS = {
    "salt-pepper": (0.2, 0.3, 0.4, 0.5, 0.6),
    "gaussian": (0.1, 0.2, 0.3, 0.4, 0.5),
    "motion-blur": (10.0, 20.0, 30.0, 40.0, 50.0),
}

# one tuning instance plus five evaluation instances per noise level
N_INSTANCES = 6


@dataclass(frozen=True)
class NoiseSpec:
    """A noise model and its strength.

    ``level`` is the flip probability for salt-pepper, the standard deviation
    for gaussian and the Gamma scale for motion-blur.
    """

    kind: str
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError("unknown noise kind %r" % (self.kind,))
        if self.kind == "salt-pepper" and not 0.0 <= self.level <= 1.0:
            raise ValueError("salt-pepper probability must lie in [0, 1]")
        if self.kind == "gaussian" and self.level < 0:
            raise ValueError("gaussian sigma must be nonnegative")
        if self.kind == "motion-blur" and self.level < 0:
            raise ValueError("motion-blur scale must be nonnegative")


def _image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2:
        raise ValueError("image must be a 2-D array, got shape %s" % (arr.shape,))
    return arr


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def salt_pepper(img, p: float, seed) -> np.ndarray:
    """Set each pixel to 0 or 1 with probability ``p / 2`` each."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    out = _image(img).copy()
    u = _rng(seed).random(out.shape)
    out[u < p / 2] = 0.0
    out[(u >= p / 2) & (u < p)] = 1.0
    return out


def gaussian_noise(img, sigma: float, seed) -> np.ndarray:
    """Add zero-mean Gaussian noise of standard deviation ``sigma`` and clip."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    arr = _image(img)
    noisy = arr + sigma * _rng(seed).standard_normal(arr.shape)
    return np.clip(noisy, 0.0, 1.0)


def motion_blur_kernel(eta: float, theta: float) -> np.ndarray:
    """Linear motion kernel of length ``eta`` pixels at ``theta`` degrees.

    The segment is centered on the kernel origin and sampled at
    ``ceil(eta)`` evenly spaced points (spacing at most one pixel), each
    splatted bilinearly onto the grid. Angles are counterclockwise with the
    row axis pointing up, so ``theta = 90`` is the transpose of ``theta = 0``.
    Returns an odd-sized kernel that sums to one.
    """
    if eta < 1:
        raise ValueError("eta must be at least 1")
    n_samples = max(1, int(math.ceil(eta - 1e-9)))
    half = (eta - 1.0) / 2.0
    s = np.linspace(-half, half, n_samples) if n_samples > 1 else np.zeros(1)
    rad = math.radians(theta)
    c, sn = math.cos(rad), math.sin(rad)
    # snap cos/sin to exact values at axis-aligned angles
    c = 0.0 if abs(c) < 1e-12 else c
    sn = 0.0 if abs(sn) < 1e-12 else sn
    cols = s * c
    rows = -s * sn
    radius = int(math.ceil(max(np.abs(cols).max(), np.abs(rows).max()))) + 1
    size = 2 * radius + 1
    kernel = np.zeros((size, size))
    r = rows + radius
    q = cols + radius
    r0 = np.floor(r).astype(int)
    q0 = np.floor(q).astype(int)
    fr = r - r0
    fq = q - q0
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        for dq, wq in ((0, 1.0 - fq), (1, fq)):
            np.add.at(kernel, (r0 + dr, q0 + dq), wr * wq)
    kernel /= kernel.sum()
    # trim symmetric zero borders so the origin stays central
    while kernel.shape[0] > 1 and not kernel[0].any() and not kernel[-1].any():
        kernel = kernel[1:-1]
    while kernel.shape[1] > 1 and not kernel[:, 0].any() and not kernel[:, -1].any():
        kernel = kernel[:, 1:-1]
    return kernel


def sample_blur_length(beta: float, rng, size=None):
    """Motion length drawn from Gamma(shape 1, scale ``beta``), unclamped."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _rng(rng).gamma(1.0, beta, size=size)


def motion_blur(img, beta: float, seed) -> np.ndarray:
    """Blur with a random linear motion.

    Draws ``theta ~ U[0, 360)`` and ``eta ~ Gamma(1, beta)`` clamped below at
    one pixel, then convolves with replicated borders and clips.
    """
    arr = _image(img)
    rng = _rng(seed)
    theta = rng.uniform(0.0, 360.0)
    eta = max(1.0, float(sample_blur_length(beta, rng)))
    kernel = motion_blur_kernel(eta, theta)
    out = ndimage.convolve(arr, kernel, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def corrupt_image(img, spec: NoiseSpec, seed=None) -> np.ndarray:
    seed = spec.seed if seed is None else seed
    if spec.kind == "salt-pepper":
        return salt_pepper(img, spec.level, seed)
    if spec.kind == "gaussian":
        return gaussian_noise(img, spec.level, seed)
    if spec.level == 0:
        return _image(img).copy()
    return motion_blur(img, spec.level, seed)


def instance_seeds(base_seed: int, count: int = N_INSTANCES, *keys: int) -> list[int]:
    """Independent 64-bit seeds, one per noise instance."""
    ss = np.random.SeedSequence([int(base_seed), *(int(k) for k in keys)])
    return [int(child.generate_state(1, np.uint64)[0]) for child in ss.spawn(count)]


def corrupt_dataset(points, image_shape, spec: NoiseSpec, seed=None) -> np.ndarray:
    """Corrupt every row of ``points`` as an image of ``image_shape``.

    Rows are row-major flattened images. Each image receives its own seed
    derived from ``seed`` (default ``spec.seed``) and its row index.
    """
    pts = np.asarray(points, dtype=float)
    h, w = image_shape
    if pts.ndim != 2 or pts.shape[1] != h * w:
        raise ValueError("rows must be flattened %dx%d images" % (h, w))
    base = spec.seed if seed is None else seed
    seeds = instance_seeds(base, pts.shape[0])
    out = np.empty_like(pts)
    for i, row in enumerate(pts):
        out[i] = corrupt_image(row.reshape(h, w), spec, seeds[i]).ravel()
    return out
