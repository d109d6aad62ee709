"""Class-weighted cross-entropy."""

from typing import Optional, Union

import numpy as np

from ..autodiff import ops
from ..autodiff.tensor import Tensor
from ..models import ClassWeights


def weighted_cross_entropy(
    logits: Tensor,
    labels: np.ndarray,
    weights: Optional[Union[ClassWeights, np.ndarray]] = None,
) -> Tensor:
    """Batch mean of w[y] * -log softmax(logits)[y], max-shifted for stability."""
    if isinstance(weights, ClassWeights):
        weights = weights.weights
    return ops.weighted_cross_entropy(logits, labels, weights)
