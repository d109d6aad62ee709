"""Module tree: parameter registry, train/eval mode, and the layers the nets use."""

from typing import Iterator, Optional

import numpy as np

from . import ops
from .tensor import DEFAULT_DTYPE, Parameter, Tensor


class Module:
    """Base class for anything that owns parameters, buffers or sub-modules.

    Registration is implicit: attributes holding a Parameter or a Module
    are discovered in definition order, which fixes parameter names and
    the checkpoint layout.
    """

    training: bool = True

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, "Module"]]:
        yield prefix, self
        for name, child in self._children():
            yield from child.named_modules(f"{prefix}.{name}" if prefix else name)

    def modules(self) -> Iterator["Module"]:
        for _, module in self.named_modules():
            yield module

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            full = f"{prefix}.{name}" if prefix else name
            if isinstance(value, Parameter):
                value.name = full
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full)

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, value in vars(self).items():
            full = f"{prefix}.{name}" if prefix else name
            if isinstance(value, Module):
                yield from value.named_buffers(full)
        for name in getattr(self, "_buffer_names", ()):
            yield (f"{prefix}.{name}" if prefix else name), getattr(self, name)

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    @property
    def dtype(self):
        params = self.parameters()
        return params[0].dtype if params else np.dtype(DEFAULT_DTYPE)

    def astype(self, dtype) -> "Module":
        """Convert parameters and buffers in place (64-bit for gradient checks)."""
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        for module in self.modules():
            for name in getattr(module, "_buffer_names", ()):
                setattr(module, name, getattr(module, name).astype(dtype))
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data for name, p in self.named_parameters()}
        state.update(self.named_buffers())
        return state


class ModuleList(Module):
    def __init__(self, modules: list[Module]):
        for i, module in enumerate(modules):
            setattr(self, str(i), module)
        self._length = len(modules)

    def __len__(self) -> int:
        return self._length

    def __iter__(self) -> Iterator[Module]:
        return (getattr(self, str(i)) for i in range(self._length))

    def __getitem__(self, i: int) -> Module:
        return getattr(self, str(i % self._length))


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(DEFAULT_DTYPE)


class PointwiseConv(Module):
    """Channel-mixing 1x1 convolution over B x C x ... inputs."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, bias: bool = False):
        self.weight = Parameter(uniform_init(rng, (c_out, c_in), c_in))
        self.bias = Parameter(uniform_init(rng, (c_out,), c_in)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = ops.pointwise_conv(x, self.weight)
        return ops.bias_add(out, self.bias) if self.bias is not None else out


class Linear(Module):
    """x @ W (+ b) for B x C_in inputs."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = Parameter(uniform_init(rng, (c_in, c_out), c_in))
        self.bias = Parameter(uniform_init(rng, (c_out,), c_in)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = ops.matmul(x, self.weight)
        return ops.bias_add(out, self.bias) if self.bias is not None else out


class BatchNorm(Module):
    _buffer_names = ("running_mean", "running_var")

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.weight = Parameter(np.ones(channels))
        self.bias = Parameter(np.zeros(channels))
        self.running_mean = np.zeros(channels, dtype=DEFAULT_DTYPE)
        self.running_var = np.ones(channels, dtype=DEFAULT_DTYPE)
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm(
            x, self.weight, self.bias, self.running_mean, self.running_var,
            training=self.training, momentum=self.momentum, eps=self.eps,
        )


class Dropout(Module):
    def __init__(self, p: float, seed: Optional[int] = None):
        self.p = p
        self.rng = np.random.default_rng(seed)
        # test hook: a train-mode pass that keeps every activation
        self.keep_all = False

    def reseed(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def forward(self, x: Tensor) -> Tensor:
        return ops.dropout(x, self.p, self.rng, training=self.training, keep_all=self.keep_all)


class ConvBlock(Module):
    """Pointwise conv (no bias) -> batch norm -> leaky ReLU."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 slope: float = 0.2, momentum: float = 0.1, eps: float = 1e-5):
        self.conv = PointwiseConv(c_in, c_out, rng, bias=False)
        self.bn = BatchNorm(c_out, momentum, eps)
        self.slope = slope

    def forward(self, x: Tensor) -> Tensor:
        return ops.leaky_relu(self.bn(self.conv(x)), self.slope)


class LinearBlock(Module):
    """Linear -> batch norm -> leaky ReLU -> dropout."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, *, bias: bool,
                 p: float, slope: float = 0.2, momentum: float = 0.1, eps: float = 1e-5,
                 seed: Optional[int] = None):
        self.linear = Linear(c_in, c_out, rng, bias=bias)
        self.bn = BatchNorm(c_out, momentum, eps)
        self.dropout = Dropout(p, seed)
        self.slope = slope

    def forward(self, x: Tensor) -> Tensor:
        return self.dropout(ops.leaky_relu(self.bn(self.linear(x)), self.slope))
