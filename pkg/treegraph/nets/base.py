"""Shared network pieces and the classifier base class."""

from abc import ABC, abstractmethod
from typing import Optional, Union

import numpy as np

from ..autodiff import ops
from ..autodiff.layers import ConvBlock, Dropout, Linear, LinearBlock, Module
from ..autodiff.tensor import Tensor
from ..errors import ContractError, ShapeError
from ..graph import edgeconv
from ..models import LayerInfo, ModelConfig, ModelSummary


class EdgeConv(Module):
    """Dynamic graph layer: k-NN in feature space, shared edge MLP on [x_i, x_j - x_i], max."""

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator, cfg: ModelConfig):
        self.k = k
        self.block = ConvBlock(2 * c_in, c_out, rng, cfg.leaky_slope, cfg.bn_momentum, cfg.bn_eps)

    def forward(self, x: Tensor) -> Tensor:
        return edgeconv(x, self.k, self.block)


class ClassificationHead(Module):
    """in -> 512 -> 256 -> C, batch norm and leaky ReLU between, dropout on hidden layers only."""

    def __init__(self, in_dim: int, cfg: ModelConfig, rng: np.random.Generator):
        h1, h2 = cfg.head_dims
        common = dict(p=cfg.dropout, slope=cfg.leaky_slope, momentum=cfg.bn_momentum, eps=cfg.bn_eps)
        self.fc1 = LinearBlock(in_dim, h1, rng, bias=False, seed=cfg.seed + 1, **common)
        self.fc2 = LinearBlock(h1, h2, rng, bias=True, seed=cfg.seed + 2, **common)
        self.out = Linear(h2, cfg.num_classes, rng, bias=True)

    def forward(self, x: Tensor) -> Tensor:
        return self.out(self.fc2(self.fc1(x)))


def global_pool(x: Tensor, dual: bool) -> Tensor:
    """Max over points, optionally concatenated with the mean over points."""
    pooled = ops.max_over_axis(x, axis=2)
    if not dual:
        return pooled
    return ops.concat_axis([pooled, ops.mean_over_axis(x, axis=2)], axis=1)


class PointCloudClassifier(Module, ABC):
    """Base class for every variant: B x 3 x N points in, B x C logits out.

    Subclasses build their layers in ``__init__`` from one seeded
    generator and implement ``embed``, which returns the pooled B x D
    global descriptor fed to the head.
    """

    name: str = ""  # registry key: "msdgcnn_pp", "dgcnn", ...
    display_name: str = ""

    def __init__(self, cfg: ModelConfig):
        cfg.validate()
        self.cfg = cfg

    @abstractmethod
    def embed(self, points: Tensor) -> Tensor:
        ...

    def min_points(self) -> int:
        return self.cfg.min_points()

    def _as_input(self, points: Union[Tensor, np.ndarray], min_points: Optional[int] = None) -> Tensor:
        if not isinstance(points, Tensor):
            points = Tensor(points, dtype=self.dtype)
        if points.ndim != 3 or points.shape[1] != 3:
            raise ShapeError(self.name, f"expects B x 3 x N points, got {points.shape}")
        required = self.min_points() if min_points is None else min_points
        if points.shape[2] < required:
            raise ContractError(
                f"{self.name}: N={points.shape[2]} is below the required {required} "
                f"(k_canopy={self.cfg.scales.k_canopy}, backbone_k={self.cfg.backbone_k})"
            )
        return points

    def forward(self, points: Union[Tensor, np.ndarray]) -> Tensor:
        return self.head(self.embed(self._as_input(points)))

    def dropouts(self) -> list[Dropout]:
        return [m for m in self.modules() if isinstance(m, Dropout)]

    def reseed_dropout(self, seed: int) -> None:
        for i, d in enumerate(self.dropouts()):
            d.reseed(seed + i)

    def set_dropout_keep_all(self, keep_all: bool) -> None:
        for d in self.dropouts():
            d.keep_all = keep_all

    def summary(self) -> ModelSummary:
        layers = [LayerInfo(name, p.shape, p.size) for name, p in self.named_parameters()]
        return ModelSummary(
            variant=self.name,
            parameter_count=sum(layer.size for layer in layers),
            layers=layers,
        )
