"""Density standardization: pairwise distances, farthest point sampling, voxel reduction."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data.cloud_io import MIN_POINTS
from .data.transforms import normalize_points
from .errors import ContractError, DegenerateCloudError
from .models import SamplingConfig

logger = logging.getLogger(__name__)

VOXEL_MAX_ITERATIONS = 64
VOXEL_MIN_FRACTION = 1.0 / 1024.0


def pairwise_neg_sq_dist(points: np.ndarray) -> np.ndarray:
    """D[i, j] = -||x_i - x_j||^2 in the input's float precision.

    Direct differences rather than the Gram expansion, so the diagonal is
    exactly 0 and the matrix exactly symmetric.
    """
    pts = np.asarray(points)
    if not np.issubdtype(pts.dtype, np.floating):
        pts = pts.astype(np.float64)
    if pts.ndim != 2:
        raise ContractError(f"expected an N x D point matrix, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ContractError("pairwise distances need finite coordinates")
    acc = np.zeros((pts.shape[0], pts.shape[0]), dtype=pts.dtype)
    # coordinate-by-coordinate so the summation order is fixed
    for d in range(pts.shape[1]):
        diff = pts[:, None, d] - pts[None, :, d]
        acc += diff * diff
    return -acc


def farthest_point_sample(
    points: np.ndarray,
    m: int,
    seed: Optional[int] = None,
    start: Optional[int] = None,
) -> np.ndarray:
    """Greedy FPS: each pick maximizes its min distance to the picks so far.

    The first index is ``start`` if given, else drawn from ``seed``, else 0.
    Ties go to the lowest index. Runs in O(N * m) with an incremental
    min-distance cache.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if m > n:
        raise ContractError(f"cannot sample {m} points from a cloud of {n}")
    if m <= 0:
        return np.empty(0, dtype=np.int64)
    if start is None:
        start = int(np.random.default_rng(seed).integers(n)) if seed is not None else 0
    if not 0 <= start < n:
        raise ContractError(f"start index {start} out of range for {n} points")

    selected = np.empty(m, dtype=np.int64)
    selected[0] = start
    min_dist = ((pts - pts[start]) ** 2).sum(axis=1)
    min_dist[start] = -np.inf
    for i in range(1, m):
        nxt = int(np.argmax(min_dist))
        selected[i] = nxt
        np.minimum(min_dist, ((pts - pts[nxt]) ** 2).sum(axis=1), out=min_dist)
        min_dist[nxt] = -np.inf
    return selected


def voxel_centroids(points: np.ndarray, voxel_size: float, origin: np.ndarray) -> np.ndarray:
    """Replace the points of each occupied voxel by their centroid."""
    pts = np.asarray(points, dtype=np.float64)
    keys = np.floor((pts - origin) / voxel_size).astype(np.int64)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    sums = np.zeros((counts.size, pts.shape[1]), dtype=np.float64)
    np.add.at(sums, inverse, pts)
    return sums / counts[:, None]


@dataclass
class VoxelResult:
    points: np.ndarray
    voxel_size: Optional[float]
    iterations: int
    converged: bool


def voxel_downsample_recursive(points: np.ndarray, cfg: SamplingConfig) -> VoxelResult:
    """Search the voxel edge length until the centroid count is near the target.

    Bisection runs in log space over [diag / 1024, diag], where diag is the
    bounding-box diagonal and the grid origin is the bounding-box minimum.
    Clouds already within ``voxel_target + voxel_tolerance`` pass through.
    """
    cfg.validate()
    pts = np.asarray(points)
    n = pts.shape[0]
    if n <= cfg.voxel_target + cfg.voxel_tolerance:
        return VoxelResult(points=pts, voxel_size=None, iterations=0, converged=True)

    origin = pts.min(axis=0).astype(np.float64)
    diag = float(np.linalg.norm(pts.max(axis=0).astype(np.float64) - origin))
    if diag <= 0:
        raise DegenerateCloudError(f"cloud of {n} points has zero extent")

    lo, hi = diag * VOXEL_MIN_FRACTION, diag
    best: Optional[tuple[int, float, np.ndarray]] = None
    for iteration in range(1, VOXEL_MAX_ITERATIONS + 1):
        size = float(np.sqrt(lo * hi))
        reduced = voxel_centroids(pts, size, origin)
        miss = abs(reduced.shape[0] - cfg.voxel_target)
        if best is None or miss < best[0]:
            best = (miss, size, reduced)
        if miss <= cfg.voxel_tolerance:
            logger.debug(f"Voxel search: {n} -> {reduced.shape[0]} points at size {size:.4g}")
            return VoxelResult(reduced.astype(pts.dtype), size, iteration, converged=True)
        if reduced.shape[0] > cfg.voxel_target:
            lo = size
        else:
            hi = size

    miss, size, reduced = best
    logger.warning(
        f"Voxel search did not reach {cfg.voxel_target}±{cfg.voxel_tolerance} in "
        f"{VOXEL_MAX_ITERATIONS} iterations; using {reduced.shape[0]} points (size {size:.4g})"
    )
    return VoxelResult(reduced.astype(pts.dtype), size, VOXEL_MAX_ITERATIONS, converged=False)


def preprocess_cloud(points: np.ndarray, cfg: SamplingConfig) -> np.ndarray:
    """Voxel-reduce large clouds, FPS to ``target_points``, normalize to the unit sphere."""
    cfg.validate()
    pts = np.asarray(points, dtype=np.float32)
    n = pts.shape[0]
    if n < MIN_POINTS:
        raise DegenerateCloudError(f"cloud has {n} points, need at least {MIN_POINTS}")
    if n < cfg.target_points:
        raise ContractError(f"cloud has {n} points, fewer than target_points={cfg.target_points}")

    voxel = voxel_downsample_recursive(pts, cfg)
    reduced = voxel.points
    if reduced.shape[0] < cfg.target_points:
        raise ContractError(
            f"voxel reduction left {reduced.shape[0]} points, fewer than "
            f"target_points={cfg.target_points}"
        )
    idx = farthest_point_sample(reduced, cfg.target_points, seed=cfg.seed)
    return normalize_points(reduced[idx]).astype(np.float32)
