"""Tree-specific train-time augmentation.

Four stages in a fixed order: height-scaled jitter, rotation about the
vertical axis, per-sample uniform scaling, and occlusion-style point
deletion. Deleted points are zeroed so the batch keeps its shape.
"""

import logging
import math
from typing import Optional, Union

import numpy as np

from .autodiff.tensor import Tensor
from .errors import ShapeError
from .models import AugmentConfig

logger = logging.getLogger(__name__)

EPS = 1e-8
KEEP_PROBABILITY = 0.9
MIN_KEEP_FRACTION = 0.8
DELETE_COIN = 0.5


def height_jitter(batch: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian noise scaled per point by its normalized height (0 at the lowest point)."""
    h = batch[:, 2:3, :]
    h_min = h.min(axis=2, keepdims=True)
    h_max = h.max(axis=2, keepdims=True)
    h_norm = (h - h_min) / (h_max - h_min + EPS)
    noise = rng.normal(0.0, sigma, size=batch.shape)
    return batch + noise * h_norm


def rotate_z(batch: np.ndarray, angles: np.ndarray) -> np.ndarray:
    out = batch.copy()
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    x, y = batch[:, 0, :], batch[:, 1, :]
    out[:, 0, :] = c * x - s * y
    out[:, 1, :] = s * x + c * y
    return out


def deletion_mask(batch_size: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(0.9) keep-mask, topped up to at least ceil(0.8 N) kept per sample."""
    mask = rng.random((batch_size, n)) < KEEP_PROBABILITY
    min_keep = math.ceil(MIN_KEEP_FRACTION * n)
    for i in range(batch_size):
        if mask[i].sum() < min_keep:
            mask[i, rng.permutation(n)[:min_keep]] = True
    return mask


def augment_batch(
    batch: Union[np.ndarray, Tensor],
    cfg: AugmentConfig,
    rng: Optional[np.random.Generator] = None,
    angles: Optional[np.ndarray] = None,
) -> Union[np.ndarray, Tensor]:
    """Augment a B x 3 x N batch; z is channel 2.

    ``angles`` overrides the sampled rotation angles (one per sample).
    Returns a new array of the same shape (a Tensor if given a Tensor).
    """
    cfg.validate()
    as_tensor = isinstance(batch, Tensor)
    data = np.array(batch.data if as_tensor else batch, copy=True)
    if data.ndim != 3 or data.shape[1] < 3:
        raise ShapeError("augment_batch", f"expects B x 3 x N points, got {data.shape}")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    dtype = data.dtype if np.issubdtype(data.dtype, np.floating) else np.float64
    out = data.astype(np.float64)
    b, _, n = out.shape

    if cfg.sigma_j > 0:
        out = height_jitter(out, cfg.sigma_j, rng)

    if cfg.rotate:
        theta = rng.uniform(0.0, 2.0 * np.pi, size=b)
        if angles is not None:
            theta = np.broadcast_to(np.asarray(angles, dtype=np.float64), (b,))
        out = rotate_z(out, theta)

    scale = rng.uniform(cfg.s_min, cfg.s_max, size=(b, 1, 1))
    out = out * scale

    if cfg.delete and rng.random() > DELETE_COIN:
        keep = deletion_mask(b, n, rng)
        out = out * keep[:, None, :]

    out = out.astype(dtype)
    return Tensor(out, dtype=dtype) if as_tensor else out
