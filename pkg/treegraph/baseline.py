"""Nearest-centroid classifier on normalized-height density histograms.

A geometry-blind reference: each cloud becomes the fraction of its points
in each height slice, and a test cloud takes the class of the nearest
class-mean histogram.
"""

import logging
from typing import Sequence

import numpy as np

from .errors import ContractError

logger = logging.getLogger(__name__)


def height_histogram_features(points: np.ndarray, bins: int = 16) -> np.ndarray:
    """Point density per normalized-height slice (z is column 2), summing to 1."""
    z = np.asarray(points, dtype=np.float64)[:, 2]
    z_min, z_max = z.min(), z.max()
    span = z_max - z_min
    heights = (z - z_min) / span if span > 0 else np.zeros_like(z)
    density, _ = np.histogram(heights, bins=bins, range=(0.0, 1.0))
    return density / len(z)


class NearestCentroidBaseline:
    def __init__(self, bins: int = 16):
        self.bins = bins
        self.centroids: np.ndarray | None = None
        self.classes: np.ndarray | None = None

    def _features(self, samples: Sequence[np.ndarray]) -> np.ndarray:
        return np.stack([height_histogram_features(s, self.bins) for s in samples])

    def fit(self, samples: Sequence[np.ndarray], labels) -> "NearestCentroidBaseline":
        labels = np.asarray(labels, dtype=np.int64)
        if len(samples) != len(labels) or len(labels) == 0:
            raise ContractError("baseline needs one label per sample and at least one sample")
        feats = self._features(samples)
        self.classes = np.unique(labels)
        self.centroids = np.stack([feats[labels == c].mean(axis=0) for c in self.classes])
        logger.debug(f"Fitted nearest-centroid baseline on {len(labels)} samples, {len(self.classes)} classes")
        return self

    def predict(self, samples: Sequence[np.ndarray]) -> np.ndarray:
        if self.centroids is None:
            raise ContractError("baseline must be fitted before predict")
        feats = self._features(samples)
        dist = ((feats[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
        return self.classes[np.argmin(dist, axis=1)]

    def score(self, samples: Sequence[np.ndarray], labels) -> float:
        """Overall accuracy in percent."""
        return 100.0 * float((self.predict(samples) == np.asarray(labels)).mean())
