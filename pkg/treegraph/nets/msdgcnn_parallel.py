"""Parallel multi-scale baseline: three identical EdgeConv branches at different k."""

import numpy as np

from ..autodiff import ops
from ..autodiff.layers import ConvBlock, Module, ModuleList
from ..autodiff.tensor import Tensor
from ..models import ModelConfig
from . import register_variant
from .base import ClassificationHead, EdgeConv, PointCloudClassifier, global_pool

BRANCH_WIDTH = 64
MLP_WIDTHS = (448, 512)


class Branch(Module):
    """xyz -> EdgeConv 64 -> EdgeConv 64, both at this branch's k."""

    def __init__(self, k: int, rng: np.random.Generator, cfg: ModelConfig):
        self.conv1 = EdgeConv(3, BRANCH_WIDTH, k, rng, cfg)
        self.conv2 = EdgeConv(BRANCH_WIDTH, BRANCH_WIDTH, k, rng, cfg)

    def forward(self, points: Tensor) -> Tensor:
        return self.conv2(self.conv1(points))


@register_variant
class ParallelMSDGCNN(PointCloudClassifier):
    name = "msdgcnn_parallel"
    display_name = "MS-DGCNN"

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        rng = np.random.default_rng(cfg.seed)
        args = (rng, cfg.leaky_slope, cfg.bn_momentum, cfg.bn_eps)
        self.branches = ModuleList([Branch(k, rng, cfg) for k in cfg.scales.as_tuple()])
        widths = (3 * BRANCH_WIDTH,) + MLP_WIDTHS + (cfg.embedding_dim,)
        self.mlp = ModuleList([ConvBlock(a, b, *args) for a, b in zip(widths[:-1], widths[1:])])
        self.head = ClassificationHead(cfg.embedding_dim, cfg, rng)

    def min_points(self) -> int:
        return self.cfg.scales.k_canopy

    def embed(self, points: Tensor) -> Tensor:
        x = ops.concat_axis([branch(points) for branch in self.branches], axis=1)
        for layer in self.mlp:
            x = layer(x)
        return global_pool(x, dual=False)
