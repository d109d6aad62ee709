"""Finite-difference checks: the checker itself and the composed blocks."""

import numpy as np
import pytest

from treegraph.autodiff import ConvBlock, Tensor, grad_check, ops
from treegraph.errors import ContractError
from treegraph.graph import edgeconv
from treegraph.models import ModelConfig, ScaleTriple
from treegraph.nets.msdgcnn_pp import MultiScaleFusion

F64 = np.float64


def _projection(shape, seed):
    w = Tensor(np.random.default_rng(seed).normal(size=shape), dtype=F64)
    return lambda y: ops.sum_all(ops.mul(y, w))


class TestGradCheck:
    """The checker on functions with known gradients."""

    def test_quadratic(self):
        x = Tensor([1.0, 2.0], requires_grad=True, dtype=F64)
        ops.sum_all(ops.mul(x, x)).backward()
        np.testing.assert_array_equal(x.grad, [2.0, 4.0])
        assert grad_check(lambda t: ops.sum_all(ops.mul(t, t)), Tensor([1.0, 2.0], dtype=F64)) < 1e-6

    def test_kink_is_excluded(self):
        """leaky_relu at exactly 0 has no derivative; the mask skips it."""
        point = Tensor([0.0, 1.0], dtype=F64)

        def f(t):
            return ops.sum_all(ops.leaky_relu(t, 0.2))

        assert grad_check(f, point) > 0.1
        assert grad_check(f, point, exclude=np.array([True, False])) < 1e-6

    def test_rejects_non_scalar(self):
        with pytest.raises(ContractError):
            grad_check(lambda t: ops.mul_scalar(t, 2.0), Tensor([1.0, 2.0], dtype=F64))

    def test_rejects_non_finite_point(self):
        with pytest.raises(ContractError):
            grad_check(lambda t: ops.sum_all(t), Tensor([1.0, np.nan], dtype=F64))


class TestComposedBlocks:
    """Fusion and EdgeConv gradients in 64-bit over many random draws.

    The step is small enough that a perturbation almost never crosses a
    leaky-ReLU zero, a max swap or a neighbor swap, and large enough that
    64-bit roundoff stays far below the tolerance.
    """

    @pytest.mark.parametrize("seed", range(100))
    def test_fusion_block(self, seed):
        rng = np.random.default_rng(seed)
        n_points = int(rng.integers(12, 21))
        cfg = ModelConfig(num_classes=3, scales=ScaleTriple(2, 4, 8), fusion_width=16, seed=seed)
        fusion = MultiScaleFusion(cfg, rng).astype(F64)
        points = Tensor(rng.normal(size=(1, 3, n_points)), dtype=F64)
        proj = _projection((1, 16, n_points), seed=seed + 1000)
        assert grad_check(lambda x: proj(fusion(x)), points, h=1e-9) < 1e-3

    @pytest.mark.parametrize("seed", range(100))
    def test_edgeconv(self, seed):
        rng = np.random.default_rng(seed)
        block = ConvBlock(6, 8, rng).astype(F64)
        features = Tensor(rng.normal(size=(1, 3, 12)), dtype=F64)
        proj = _projection((1, 8, 12), seed=seed + 2000)
        assert grad_check(lambda x: proj(edgeconv(x, 4, block)), features, h=1e-9) < 1e-3

    def test_weighted_loss_through_linear(self):
        rng = np.random.default_rng(6)
        w = Tensor(rng.normal(size=(5, 3)), dtype=F64)
        labels = np.array([0, 2, 1, 2])
        weights = np.array([1.0, 1.5, 2.0])

        def f(x):
            return ops.weighted_cross_entropy(ops.matmul(x, w), labels, weights)

        assert grad_check(f, Tensor(rng.normal(size=(4, 5)), dtype=F64)) < 1e-4
