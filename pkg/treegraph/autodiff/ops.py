"""Differentiable primitives.

Each primitive is a Function subclass with an exact analytic backward,
plus a small wrapper that validates shapes. Reductions accumulate in
64-bit and cast back to the input dtype.
"""

from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, ContractError, ShapeError
from .tensor import Function, Tensor

ACC_DTYPE = np.float64


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(op, f"operands must have identical shapes, got {a.shape} and {b.shape}")


def _normalize_axis(op: str, axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise ShapeError(op, f"axis {axis} out of range for a {ndim}-d tensor")
    return axis % ndim


class MatMul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("matmul", f"expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", f"inner dimensions differ: {a.shape} @ {b.shape}")
    return MatMul.apply(a, b)


class PointwiseConv(Function):
    """1x1 convolution: mixes channels (axis 1) independently at every position."""

    def forward(self, x, w):
        batch, c_in = x.shape[:2]
        self.x_shape = x.shape
        self.x_flat = x.reshape(batch, c_in, -1)
        self.w = w
        out = np.matmul(w, self.x_flat)
        return out.reshape((batch, w.shape[0]) + x.shape[2:])

    def backward(self, grad):
        batch = self.x_shape[0]
        g_flat = grad.reshape(batch, self.w.shape[0], -1)
        grad_w = np.tensordot(g_flat, self.x_flat, axes=([0, 2], [0, 2]))
        grad_x = np.matmul(self.w.T, g_flat).reshape(self.x_shape)
        return grad_x, grad_w.astype(self.w.dtype, copy=False)


def pointwise_conv(x: Tensor, weight: Tensor) -> Tensor:
    if x.ndim < 2:
        raise ShapeError("pointwise_conv", f"input needs a channel axis, got shape {x.shape}")
    if weight.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise ShapeError(
            "pointwise_conv",
            f"weight {weight.shape} does not map {x.shape[1]} input channels",
        )
    return PointwiseConv.apply(x, weight)


class BiasAdd(Function):
    def forward(self, x, b):
        self.ndim = x.ndim
        shape = (1, b.shape[0]) + (1,) * (x.ndim - 2)
        return x + b.reshape(shape)

    def backward(self, grad):
        axes = (0,) + tuple(range(2, self.ndim))
        grad_b = grad.sum(axis=axes, dtype=ACC_DTYPE).astype(grad.dtype)
        return grad, grad_b


def bias_add(x: Tensor, bias: Tensor) -> Tensor:
    if bias.ndim != 1 or x.ndim < 2 or bias.shape[0] != x.shape[1]:
        raise ShapeError("bias_add", f"bias {bias.shape} does not match channels of {x.shape}")
    return BiasAdd.apply(x, bias)


class GatherLastAxis(Function):
    """out[b, c, n, k] = x[b, c, idx[b, n, k]]."""

    def forward(self, x, *, idx):
        batch, channels, n = x.shape
        self.x_shape = x.shape
        self.idx = idx
        flat = idx.reshape(batch, 1, -1)
        out = np.take_along_axis(x, np.broadcast_to(flat, (batch, channels, flat.shape[2])), axis=2)
        return out.reshape((batch, channels) + idx.shape[1:])

    def backward(self, grad):
        batch, channels, n = self.x_shape
        # scatter-add by sorting the global target index and reducing runs
        offsets = (np.arange(batch) * n).reshape(batch, 1)
        targets = (self.idx.reshape(batch, -1) + offsets).ravel()
        values = np.moveaxis(grad.reshape(batch, channels, -1), 1, 0).reshape(channels, -1)
        order = np.argsort(targets, kind="stable")
        sorted_targets = targets[order]
        starts = np.flatnonzero(np.r_[True, sorted_targets[1:] != sorted_targets[:-1]])
        sums = np.add.reduceat(values[:, order], starts, axis=1)
        grad_x = np.zeros((channels, batch * n), dtype=grad.dtype)
        grad_x[:, sorted_targets[starts]] = sums
        return (np.moveaxis(grad_x.reshape(channels, batch, n), 0, 1),)


def gather_last_axis(x: Tensor, idx: np.ndarray) -> Tensor:
    if x.ndim != 3:
        raise ShapeError("gather_last_axis", f"expects a B x C x N tensor, got {x.shape}")
    idx = np.asarray(idx)
    if idx.ndim != 3 or idx.shape[0] != x.shape[0] or idx.shape[1] != x.shape[2]:
        raise ShapeError(
            "gather_last_axis",
            f"index shape {idx.shape} does not match B x N x K for input {x.shape}",
        )
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[2]):
        raise ContractError(f"gather_last_axis: indices must lie in [0, {x.shape[2]})")
    return GatherLastAxis.apply(x, idx=idx.astype(np.intp, copy=False))


class Concat(Function):
    def forward(self, *arrays, axis):
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


def concat_axis(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    if not tensors:
        raise ContractError("concat_axis needs at least one tensor")
    ndim = tensors[0].ndim
    axis = _normalize_axis("concat_axis", axis, ndim)
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeError(
                "concat_axis",
                f"shapes {[x.shape for x in tensors]} differ outside axis {axis}",
            )
    return Concat.apply(*tensors, axis=axis)


class MaxOverAxis(Function):
    def forward(self, x, *, axis):
        self.axis = axis
        self.x_shape = x.shape
        # np.argmax returns the first maximal position, so ties go to the lowest index
        self.argmax = np.expand_dims(np.argmax(x, axis=axis), axis)
        return np.take_along_axis(x, self.argmax, axis=axis).squeeze(axis)

    def backward(self, grad):
        grad_x = np.zeros(self.x_shape, dtype=grad.dtype)
        np.put_along_axis(grad_x, self.argmax, np.expand_dims(grad, self.axis), axis=self.axis)
        return (grad_x,)


def max_over_axis(x: Tensor, axis: int = -1) -> Tensor:
    axis = _normalize_axis("max_over_axis", axis, x.ndim)
    if x.shape[axis] == 0:
        raise ShapeError("max_over_axis", "cannot reduce an empty axis")
    return MaxOverAxis.apply(x, axis=axis)


class MeanOverAxis(Function):
    def forward(self, x, *, axis):
        self.axis = axis
        self.x_shape = x.shape
        return x.mean(axis=axis, dtype=ACC_DTYPE).astype(x.dtype)

    def backward(self, grad):
        n = self.x_shape[self.axis]
        grad_x = np.broadcast_to(np.expand_dims(grad / n, self.axis), self.x_shape)
        return (np.array(grad_x),)


def mean_over_axis(x: Tensor, axis: int = -1) -> Tensor:
    axis = _normalize_axis("mean_over_axis", axis, x.ndim)
    if x.shape[axis] == 0:
        raise ShapeError("mean_over_axis", "cannot reduce an empty axis")
    return MeanOverAxis.apply(x, axis=axis)


class SumAll(Function):
    def forward(self, x):
        self.x_shape = x.shape
        return np.asarray(x.sum(dtype=ACC_DTYPE), dtype=x.dtype)

    def backward(self, grad):
        return (np.full(self.x_shape, grad, dtype=grad.dtype),)


def sum_all(x: Tensor) -> Tensor:
    return SumAll.apply(x)


class LeakyReLU(Function):
    def forward(self, x, *, slope):
        self.positive = x > 0
        self.slope = slope
        return np.where(self.positive, x, x * slope).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (np.where(self.positive, grad, grad * self.slope).astype(grad.dtype, copy=False),)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    return LeakyReLU.apply(x, slope=slope)


class BatchNorm(Function):
    """Per-channel normalization over every axis except axis 1.

    In training mode the batch statistics are used and the running
    estimates are updated in place; in eval mode the running estimates
    are used, which makes the op a fixed affine map. A training batch with
    a single value per channel has no spread to normalize by, so it is
    treated like eval mode and leaves the running estimates alone.
    """

    def forward(self, x, weight, bias, *, running_mean, running_var, training, momentum, eps):
        axes = (0,) + tuple(range(2, x.ndim))
        bshape = (1, x.shape[1]) + (1,) * (x.ndim - 2)
        count = x.size // x.shape[1]
        self.axes, self.bshape = axes, bshape
        self.training = training and count > 1
        self.weight = weight
        if self.training:
            mean = x.mean(axis=axes, dtype=ACC_DTYPE)
            centered = x - mean.reshape(bshape).astype(x.dtype)
            var = np.square(centered).mean(axis=axes, dtype=ACC_DTYPE)
            unbiased = var * count / (count - 1)
            running_mean *= 1.0 - momentum
            running_mean += (momentum * mean).astype(running_mean.dtype)
            running_var *= 1.0 - momentum
            running_var += (momentum * unbiased).astype(running_var.dtype)
        else:
            mean = running_mean.astype(ACC_DTYPE)
            var = running_var.astype(ACC_DTYPE)
            centered = x - mean.reshape(bshape).astype(x.dtype)
        inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
        self.inv_std = inv_std.reshape(bshape)
        self.x_hat = centered * self.inv_std
        return (self.x_hat * weight.reshape(bshape) + bias.reshape(bshape)).astype(x.dtype, copy=False)

    def backward(self, grad):
        axes, bshape = self.axes, self.bshape
        grad_bias = grad.sum(axis=axes, dtype=ACC_DTYPE)
        grad_weight = (grad * self.x_hat).sum(axis=axes, dtype=ACC_DTYPE)
        g_hat = grad * self.weight.reshape(bshape)
        if self.training:
            mean_g = g_hat.mean(axis=axes, dtype=ACC_DTYPE).reshape(bshape)
            mean_gx = (g_hat * self.x_hat).mean(axis=axes, dtype=ACC_DTYPE).reshape(bshape)
            grad_x = self.inv_std * (g_hat - mean_g.astype(grad.dtype) - self.x_hat * mean_gx.astype(grad.dtype))
        else:
            grad_x = g_hat * self.inv_std
        dtype = grad.dtype
        return grad_x.astype(dtype, copy=False), grad_weight.astype(dtype), grad_bias.astype(dtype)


def batch_norm(
    x: Tensor,
    weight: Tensor,
    bias: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    if x.ndim < 2:
        raise ShapeError("batch_norm", f"input needs a channel axis, got shape {x.shape}")
    channels = x.shape[1]
    for name, arr in (("weight", weight.data), ("bias", bias.data),
                      ("running_mean", running_mean), ("running_var", running_var)):
        if arr.shape != (channels,):
            raise ShapeError("batch_norm", f"{name} has shape {arr.shape}, expected ({channels},)")
    return BatchNorm.apply(
        x, weight, bias,
        running_mean=running_mean, running_var=running_var,
        training=training, momentum=momentum, eps=eps,
    )


class Dropout(Function):
    def forward(self, x, *, mask, scale):
        self.mask = mask
        self.scale = scale
        return (x * mask * scale).astype(x.dtype, copy=False)

    def backward(self, grad):
        return ((grad * self.mask * self.scale).astype(grad.dtype, copy=False),)


def dropout(
    x: Tensor,
    p: float,
    rng: np.random.Generator,
    training: bool = True,
    keep_all: bool = False,
) -> Tensor:
    """Inverted dropout; identity when not training, p == 0 or keep_all is set."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0 or keep_all:
        return x
    mask = rng.random(x.shape) >= p
    return Dropout.apply(x, mask=mask, scale=1.0 / (1.0 - p))


class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class MulScalar(Function):
    def forward(self, x, *, c):
        self.c = c
        return (x * c).astype(x.dtype, copy=False)

    def backward(self, grad):
        return ((grad * self.c).astype(grad.dtype, copy=False),)


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("add", a, b)
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("sub", a, b)
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape("mul", a, b)
    return Mul.apply(a, b)


def mul_scalar(x: Tensor, c: float) -> Tensor:
    return MulScalar.apply(x, c=c)


class L2NormAxis(Function):
    def forward(self, x, *, axis):
        self.x, self.axis = x, axis
        norm = np.sqrt((x.astype(ACC_DTYPE) ** 2).sum(axis=axis, keepdims=True))
        self.norm = norm.astype(x.dtype)
        return self.norm

    def backward(self, grad):
        safe = np.where(self.norm > 0, self.norm, 1)
        # zero vectors get the zero subgradient
        scale = np.where(self.norm > 0, grad / safe, 0)
        return ((self.x * scale).astype(grad.dtype, copy=False),)


def l2_norm_axis(x: Tensor, axis: int = 1) -> Tensor:
    """Euclidean norm over one axis, kept as a size-1 axis."""
    axis = _normalize_axis("l2_norm_axis", axis, x.ndim)
    return L2NormAxis.apply(x, axis=axis)


class UnitDirectionAxis(Function):
    """x / (||x|| + eps) along one axis."""

    def forward(self, x, *, axis, eps):
        self.x, self.axis = x, axis
        norm = np.sqrt((x.astype(ACC_DTYPE) ** 2).sum(axis=axis, keepdims=True))
        self.norm = norm
        self.denom = norm + eps
        return (x / self.denom).astype(x.dtype)

    def backward(self, grad):
        x = self.x.astype(ACC_DTYPE)
        g = grad.astype(ACC_DTYPE)
        dot = (g * x).sum(axis=self.axis, keepdims=True)
        safe_norm = np.where(self.norm > 0, self.norm, 1.0)
        coupling = np.where(self.norm > 0, dot / (self.denom ** 2 * safe_norm), 0.0)
        grad_x = g / self.denom - x * coupling
        return (grad_x.astype(grad.dtype),)


def unit_direction_axis(x: Tensor, axis: int = 1, eps: float = 1e-8) -> Tensor:
    if eps <= 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    axis = _normalize_axis("unit_direction_axis", axis, x.ndim)
    return UnitDirectionAxis.apply(x, axis=axis, eps=eps)


class WeightedCrossEntropy(Function):
    """Mean over the batch of w[y] * -log softmax(logits)[y]."""

    def forward(self, logits, *, labels, weights):
        z = logits.astype(ACC_DTYPE)
        shifted = z - z.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_norm
        rows = np.arange(z.shape[0])
        self.probs = np.exp(log_probs)
        self.labels, self.rows = labels, rows
        self.sample_weights = weights[labels]
        losses = -log_probs[rows, labels] * self.sample_weights
        return np.asarray(losses.mean(), dtype=logits.dtype)

    def backward(self, grad):
        batch = self.probs.shape[0]
        delta = self.probs.copy()
        delta[self.rows, self.labels] -= 1.0
        delta *= (self.sample_weights / batch)[:, None]
        return ((delta * float(grad)).astype(grad.dtype),)


def weighted_cross_entropy(
    logits: Tensor, labels: np.ndarray, weights: Optional[np.ndarray] = None
) -> Tensor:
    if logits.ndim != 2:
        raise ShapeError("weighted_cross_entropy", f"logits must be B x C, got {logits.shape}")
    batch, classes = logits.shape
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (batch,):
        raise ShapeError("weighted_cross_entropy", f"labels shape {labels.shape} != ({batch},)")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ContractError(f"labels must lie in [0, {classes}), got range "
                            f"[{labels.min()}, {labels.max()}]")
    if weights is None:
        weights = np.ones(classes, dtype=ACC_DTYPE)
    weights = np.asarray(weights, dtype=ACC_DTYPE)
    if weights.shape != (classes,):
        raise ShapeError("weighted_cross_entropy", f"weights shape {weights.shape} != ({classes},)")
    return WeightedCrossEntropy.apply(logits, labels=labels, weights=weights)


PRIMITIVES = {
    "matmul": matmul,
    "pointwise_conv": pointwise_conv,
    "bias_add": bias_add,
    "gather_last_axis": gather_last_axis,
    "concat_axis": concat_axis,
    "max_over_axis": max_over_axis,
    "mean_over_axis": mean_over_axis,
    "sum_all": sum_all,
    "leaky_relu": leaky_relu,
    "batch_norm": batch_norm,
    "dropout": dropout,
    "add": add,
    "sub": sub,
    "mul": mul,
    "mul_scalar": mul_scalar,
    "l2_norm_axis": l2_norm_axis,
    "unit_direction_axis": unit_direction_axis,
    "weighted_cross_entropy": weighted_cross_entropy,
}
