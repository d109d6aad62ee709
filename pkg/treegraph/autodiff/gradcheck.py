"""Central-difference gradient checking in 64-bit."""

from typing import Callable, Optional

import numpy as np

from ..errors import ContractError
from .tensor import Tensor, no_grad


def grad_check(
    f: Callable[[Tensor], Tensor],
    point: Tensor,
    h: float = 1e-6,
    exclude: Optional[np.ndarray] = None,
) -> float:
    """Compare the analytic gradient of ``f`` at ``point`` with central differences.

    Returns max |analytic - numeric| / max(1, |numeric|) over coordinates.
    ``exclude`` is a boolean mask of coordinates to skip (kinks such as
    leaky_relu at 0). Any module parameters inside ``f`` should already be
    64-bit; the point is promoted here.
    """
    x = np.array(point.data, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ContractError("grad_check point must be finite")

    point_t = Tensor(x, requires_grad=True, dtype=np.float64)
    out = f(point_t)
    if out.size != 1:
        raise ContractError(f"grad_check needs a scalar-valued function, got shape {out.shape}")
    out.backward()
    analytic = point_t.grad if point_t.grad is not None else np.zeros_like(x)

    numeric = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_num = numeric.reshape(-1)
    with no_grad():
        for i in range(flat_x.size):
            original = flat_x[i]
            flat_x[i] = original + h
            plus = f(Tensor(x, dtype=np.float64)).item()
            flat_x[i] = original - h
            minus = f(Tensor(x, dtype=np.float64)).item()
            flat_x[i] = original
            flat_num[i] = (plus - minus) / (2.0 * h)

    error = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    if exclude is not None:
        error = np.where(np.asarray(exclude, dtype=bool).reshape(error.shape), 0.0, error)
    return float(error.max()) if error.size else 0.0
