"""Hierarchical multi-scale network: scale-specific fusion, then a dynamic-graph backbone."""

import numpy as np

from ..autodiff import ops
from ..autodiff.layers import ConvBlock, Module
from ..autodiff.tensor import Tensor
from ..graph import FEATURE_CHANNELS, build_scale_features, knn_multiscale
from ..models import ModelConfig
from . import register_variant
from .base import ClassificationHead, EdgeConv, PointCloudClassifier, global_pool


class MultiScaleFusion(Module):
    """Local/branch/canopy edge features -> per-scale MLP + max -> 192 -> psi -> 64.

    k-NN runs once on the raw coordinates; the three neighborhoods are
    nested prefixes of the same ranking.
    """

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        width = cfg.fusion_width
        args = (rng, cfg.leaky_slope, cfg.bn_momentum, cfg.bn_eps)
        c_local, c_branch, c_canopy = FEATURE_CHANNELS
        self.phi_local = ConvBlock(c_local, width, *args)
        self.phi_branch = ConvBlock(c_branch, width, *args)
        self.phi_canopy = ConvBlock(c_canopy, width, *args)
        self.psi = ConvBlock(cfg.fusion_concat_width, width, *args)
        self.scales = cfg.scales
        self.eps = cfg.feature_eps

    def concat_features(self, points: Tensor) -> Tensor:
        """The B x 192 x N scale concatenation before psi."""
        idx = knn_multiscale(points, self.scales)
        feats = build_scale_features(points, idx, self.eps)
        pooled = [
            ops.max_over_axis(phi(f), axis=-1)
            for phi, f in zip((self.phi_local, self.phi_branch, self.phi_canopy), feats.as_tuple())
        ]
        return ops.concat_axis(pooled, axis=1)

    def forward(self, points: Tensor) -> Tensor:
        return self.psi(self.concat_features(points))


@register_variant
class MSDGCNNPlusPlus(PointCloudClassifier):
    name = "msdgcnn_pp"
    display_name = "MS-DGCNN++"

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        rng = np.random.default_rng(cfg.seed)
        k = cfg.backbone_k
        width = cfg.fusion_width
        self.fusion = MultiScaleFusion(cfg, rng)
        self.conv1 = EdgeConv(width, 64, k, rng, cfg)
        self.conv2 = EdgeConv(64, 128, k, rng, cfg)
        self.conv3 = EdgeConv(128, 256, k, rng, cfg)
        skip = width + 64 + 128 + 256
        self.embedding = ConvBlock(skip, cfg.embedding_dim, rng, cfg.leaky_slope, cfg.bn_momentum, cfg.bn_eps)
        self.head = ClassificationHead(2 * cfg.embedding_dim, cfg, rng)

    def fusion_forward(self, points) -> Tensor:
        return self.fusion(self._as_input(points, min_points=self.cfg.scales.k_canopy))

    def embed(self, points: Tensor) -> Tensor:
        z = self.fusion(points)
        x1 = self.conv1(z)
        x2 = self.conv2(x1)
        x3 = self.conv3(x2)
        x = self.embedding(ops.concat_axis([z, x1, x2, x3], axis=1))
        return global_pool(x, dual=True)
