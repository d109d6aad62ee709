"""Single-scale dynamic graph CNN baseline."""

import numpy as np

from ..autodiff import ops
from ..autodiff.layers import ConvBlock
from ..autodiff.tensor import Tensor
from ..models import ModelConfig
from . import register_variant
from .base import ClassificationHead, EdgeConv, PointCloudClassifier, global_pool


@register_variant
class DGCNN(PointCloudClassifier):
    """Four EdgeConvs at one k on raw xyz, skip-concat 512, embedding 1024, dual pooling."""

    name = "dgcnn"
    display_name = "DGCNN"

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        rng = np.random.default_rng(cfg.seed)
        k = cfg.backbone_k
        self.conv1 = EdgeConv(3, 64, k, rng, cfg)
        self.conv2 = EdgeConv(64, 64, k, rng, cfg)
        self.conv3 = EdgeConv(64, 128, k, rng, cfg)
        self.conv4 = EdgeConv(128, 256, k, rng, cfg)
        self.embedding = ConvBlock(512, cfg.embedding_dim, rng, cfg.leaky_slope, cfg.bn_momentum, cfg.bn_eps)
        self.head = ClassificationHead(2 * cfg.embedding_dim, cfg, rng)

    def min_points(self) -> int:
        return self.cfg.backbone_k

    def embed(self, points: Tensor) -> Tensor:
        x1 = self.conv1(points)
        x2 = self.conv2(x1)
        x3 = self.conv3(x2)
        x4 = self.conv4(x3)
        x = self.embedding(ops.concat_axis([x1, x2, x3, x4], axis=1))
        return global_pool(x, dual=True)
