"""k-NN graphs, multi-scale edge features, and the EdgeConv aggregation."""

import logging
from typing import Callable, Union

import numpy as np

from .autodiff import ops
from .autodiff.tensor import Tensor
from .errors import ContractError, ShapeError
from .models import NeighborIndexSet, ScaleFeatures, ScaleTriple

logger = logging.getLogger(__name__)

EPS = 1e-8
FEATURE_CHANNELS = (6, 9, 7)

ArrayLike = Union[np.ndarray, Tensor]


def _as_batch(features: ArrayLike) -> np.ndarray:
    data = features.data if isinstance(features, Tensor) else np.asarray(features)
    if data.ndim == 2:
        data = data[None]
    if data.ndim != 3:
        raise ShapeError("knn", f"expects B x D x N features, got shape {data.shape}")
    return data


def knn_indices(features: ArrayLike, k: int) -> np.ndarray:
    """Indices of the k nearest points for every point, B x N x k.

    Squared distances come from the 64-bit Gram expansion of the features
    centered per sample, clamped at 0.
    Self ranks first even against exact duplicates; other ties go to the
    lowest index (stable sort).
    """
    x = _as_batch(features).astype(np.float64)
    batch, _, n = x.shape
    if not 1 <= k <= n:
        raise ContractError(f"k={k} must lie in [1, N={n}]")
    x = x - x.mean(axis=2, keepdims=True)
    sq = np.einsum("bdn,bdn->bn", x, x)
    inner = np.matmul(x.transpose(0, 2, 1), x)
    dist = np.maximum(sq[:, :, None] + sq[:, None, :] - 2.0 * inner, 0.0)
    diag = np.arange(n)
    dist[:, diag, diag] = -1.0
    return np.argsort(dist, axis=-1, kind="stable")[:, :, :k]


def knn_multiscale(features: ArrayLike, scales: ScaleTriple) -> NeighborIndexSet:
    """One sort, sliced to k_local, k_branch and k_canopy; the sets are nested."""
    n = _as_batch(features).shape[2]
    scales.validate(n_points=n, strict=False)
    order = knn_indices(features, scales.k_canopy)
    return NeighborIndexSet(
        local=np.ascontiguousarray(order[:, :, : scales.k_local]),
        branch=np.ascontiguousarray(order[:, :, : scales.k_branch]),
        canopy=order,
    )


def center_index(batch: int, n: int, k: int) -> np.ndarray:
    """idx[b, n, :] = n; gathering with it replicates each center k times."""
    return np.broadcast_to(np.arange(n).reshape(1, n, 1), (batch, n, k))


def _relative(points: Tensor, idx: np.ndarray) -> tuple[Tensor, Tensor]:
    batch, _, n = points.shape
    nbr = ops.gather_last_axis(points, idx)
    ctr = ops.gather_last_axis(points, center_index(batch, n, idx.shape[2]))
    return ops.sub(nbr, ctr), ctr


def build_scale_features(points: Tensor, idx: NeighborIndexSet, eps: float = EPS) -> ScaleFeatures:
    """Scale-specific edge features from raw coordinates.

    local:  [R, X_ctr]                     6 channels
    branch: [R, R / (||R|| + eps), X_ctr]  9 channels
    canopy: [R, X_ctr, ||R||]              7 channels

    with R = X_nbr - X_ctr.
    """
    if points.ndim != 3 or points.shape[1] != 3:
        raise ShapeError("build_scale_features", f"expects B x 3 x N points, got {points.shape}")
    r1, c1 = _relative(points, idx.local)
    r2, c2 = _relative(points, idx.branch)
    r3, c3 = _relative(points, idx.canopy)
    return ScaleFeatures(
        local=ops.concat_axis([r1, c1], axis=1),
        branch=ops.concat_axis([r2, ops.unit_direction_axis(r2, axis=1, eps=eps), c2], axis=1),
        canopy=ops.concat_axis([r3, c3, ops.l2_norm_axis(r3, axis=1)], axis=1),
    )


def edge_features(x: Tensor, idx: np.ndarray) -> Tensor:
    """[x_i, x_j - x_i] for every edge: B x 2D x N x k."""
    rel, ctr = _relative(x, idx)
    return ops.concat_axis([ctr, rel], axis=1)


def edgeconv(features: Tensor, k: int, block: Callable[[Tensor], Tensor]) -> Tensor:
    """Dynamic EdgeConv: k-NN in the current feature space, edge MLP, max over neighbors."""
    if features.ndim != 3:
        raise ShapeError("edgeconv", f"expects B x D x N features, got {features.shape}")
    idx = knn_indices(features, k)
    return ops.max_over_axis(block(edge_features(features, idx)), axis=-1)
