"""Cloud normalization and class-imbalance weights."""

import dataclasses
import logging

import numpy as np

from ..errors import ContractError, DegenerateCloudError
from ..models import ClassWeights, PointCloudSample

logger = logging.getLogger(__name__)

DEGENERATE_EXTENT = 1e-12


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Center on the centroid and scale so the farthest point has norm 1."""
    pts = np.asarray(points, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    radius = np.sqrt((centered ** 2).sum(axis=1)).max() if len(centered) else 0.0
    if radius < DEGENERATE_EXTENT:
        raise DegenerateCloudError(
            f"cloud of {len(pts)} points has no spatial extent (max deviation {radius:.3g})"
        )
    dtype = np.asarray(points).dtype
    if not np.issubdtype(dtype, np.floating):
        dtype = np.float64
    return (centered / radius).astype(dtype, copy=False)


def normalize_unit_sphere(cloud: PointCloudSample) -> PointCloudSample:
    return dataclasses.replace(cloud, points=normalize_points(cloud.points))


def compute_class_weights(counts) -> ClassWeights:
    """w_i = n_max / n_mean when n_i < n_mean, else n_max / n_i."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or counts.size == 0:
        raise ContractError("class counts must be a non-empty vector")
    if counts.min() < 1:
        raise ContractError(f"every class needs at least one sample, got counts {counts.tolist()}")
    n_mean = counts.mean(dtype=np.float64)
    n_max = float(counts.max())
    weights = np.where(counts < n_mean, n_max / n_mean, n_max / counts.astype(np.float64))
    logger.debug(f"Class weights for counts {counts.tolist()}: {np.round(weights, 4).tolist()}")
    return ClassWeights(weights=weights, counts=counts)
