"""Synthetic three-class tree clouds for desk-scale checks.

Shapes: ``conifer`` (tapered cylinder crown over a bare trunk),
``broadleaf`` (sphere-on-stick) and ``shrub`` (branched cone). Every
cloud gets seeded shape noise, sensor jitter and a variable share of
ground/understory returns, so the classes overlap in simple height
statistics while staying separable by geometry.
"""

import logging
from pathlib import Path
from typing import Callable, Union

import numpy as np

from ..errors import ConfigError
from ..models import DatasetManifest, PointCloudSample
from .cloud_io import write_xyz
from .manifest import split_manifest, write_manifest

logger = logging.getLogger(__name__)

SYNTH_CLASSES = ("broadleaf", "conifer", "shrub")
MIN_PER_CLASS = 4


def _ring(rng: np.random.Generator, radius: np.ndarray) -> np.ndarray:
    theta = rng.uniform(0.0, 2.0 * np.pi, size=radius.shape)
    return np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)


def _trunk(rng: np.random.Generator, n: int, height: float, radius: float) -> np.ndarray:
    z = rng.uniform(0.0, height, size=n)
    xy = _ring(rng, np.full(n, radius))
    return np.column_stack([xy, z])


def _ground(rng: np.random.Generator, n: int, spread: float) -> np.ndarray:
    r = spread * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    xy = _ring(rng, r)
    z = np.abs(rng.normal(0.0, 0.03 * spread, size=n))
    return np.column_stack([xy, z])


def make_conifer(rng: np.random.Generator, n: int) -> np.ndarray:
    height = rng.uniform(6.0, 14.0)
    crown_base = height * rng.uniform(0.1, 0.35)
    base_radius = height * rng.uniform(0.18, 0.3)
    taper = rng.uniform(0.7, 1.3)
    n_trunk = int(n * rng.uniform(0.05, 0.15))
    n_crown = n - n_trunk

    # surface density follows the radius, so heights favor the wide base
    t = 1.0 - np.sqrt(rng.uniform(0.0, 1.0, size=n_crown))
    z = crown_base + t * (height - crown_base)
    r = base_radius * (1.0 - t) ** taper * rng.uniform(0.7, 1.0, size=n_crown)
    crown = np.column_stack([_ring(rng, r), z])
    trunk = _trunk(rng, n_trunk, crown_base, rng.uniform(0.1, 0.25))
    return np.vstack([trunk, crown])


def make_broadleaf(rng: np.random.Generator, n: int) -> np.ndarray:
    height = rng.uniform(6.0, 14.0)
    stem = height * rng.uniform(0.3, 0.55)
    crown_radius = 0.5 * (height - stem) * rng.uniform(0.8, 1.1)
    squash = rng.uniform(0.7, 1.1)
    n_trunk = int(n * rng.uniform(0.05, 0.15))
    n_crown = n - n_trunk

    direction = rng.normal(size=(n_crown, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    shell = crown_radius * rng.uniform(0.75, 1.0, size=(n_crown, 1)) * direction
    shell[:, 2] *= squash
    crown = shell + np.array([0.0, 0.0, stem + crown_radius * squash])
    trunk = _trunk(rng, n_trunk, stem, rng.uniform(0.1, 0.3))
    return np.vstack([trunk, crown])


def make_shrub(rng: np.random.Generator, n: int) -> np.ndarray:
    height = rng.uniform(2.0, 5.0)
    n_branches = int(rng.integers(4, 9))
    n_foliage = int(n * 0.1)
    per_branch = np.full(n_branches, (n - n_foliage) // n_branches)
    per_branch[: (n - n_foliage) % n_branches] += 1

    parts = []
    for count in per_branch:
        tip_height = height * rng.uniform(0.6, 1.0)
        tip_offset = _ring(rng, np.array([height * rng.uniform(0.3, 0.6)]))[0]
        t = rng.uniform(0.0, 1.0, size=count)
        xy = np.outer(t, tip_offset) + rng.normal(0.0, 0.05 * height, size=(count, 2))
        z = t * tip_height
        parts.append(np.column_stack([xy, z]))

    # inverted-cone envelope of leaves around the branch tips
    t = np.sqrt(rng.uniform(0.0, 1.0, size=n_foliage))
    r = 0.6 * height * t * np.sqrt(rng.uniform(0.0, 1.0, size=n_foliage))
    parts.append(np.column_stack([_ring(rng, r), t * height]))
    return np.vstack(parts)


_GENERATORS: dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "broadleaf": make_broadleaf,
    "conifer": make_conifer,
    "shrub": make_shrub,
}


def generate_tree(class_name: str, rng: np.random.Generator, n_points: int = 1024) -> np.ndarray:
    """One raw cloud in meters: shape + ground returns + sensor jitter."""
    try:
        make = _GENERATORS[class_name]
    except KeyError:
        raise ConfigError(f"unknown synthetic class {class_name!r}; expected {SYNTH_CLASSES}") from None
    n_ground = int(n_points * rng.uniform(0.0, 0.3))
    body = make(rng, n_points - n_ground)
    extent = float(np.abs(body[:, :2]).max()) + 0.5
    ground = _ground(rng, n_ground, 1.5 * extent)
    points = np.vstack([body, ground])
    points += rng.normal(0.0, 0.01 * points[:, 2].max(), size=points.shape)
    return points[rng.permutation(len(points))].astype(np.float32)


def generate_dataset(n_per_class: int, seed: int = 0, n_points: int = 1024) -> list[PointCloudSample]:
    if n_per_class < MIN_PER_CLASS:
        raise ConfigError(f"n_per_class must be >= {MIN_PER_CLASS}, got {n_per_class}")
    rng = np.random.default_rng(seed)
    samples = []
    for label, class_name in enumerate(SYNTH_CLASSES):
        for i in range(n_per_class):
            samples.append(
                PointCloudSample(
                    points=generate_tree(class_name, rng, n_points),
                    label=label,
                    source_path=f"{class_name}/{i:04d}.xyz",
                )
            )
    return samples


def write_synthetic_dataset(
    out_dir: Union[str, Path],
    n_per_class: int,
    seed: int = 0,
    n_points: int = 1024,
    test_fraction: float = 1.0 / 3.0,
) -> DatasetManifest:
    """Write ``<class>/<i>.xyz`` files plus ``manifest.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    samples = generate_dataset(n_per_class, seed, n_points)
    items = []
    for sample in samples:
        write_xyz(out_dir / sample.source_path, sample.points)
        items.append((sample.source_path, SYNTH_CLASSES[sample.label]))
    manifest = split_manifest(items, test_fraction=test_fraction, seed=seed)
    write_manifest(out_dir / "manifest.csv", manifest)
    logger.info(f"Wrote {len(samples)} synthetic clouds ({n_per_class} per class) to {out_dir}")
    return manifest
