"""Dataset manifests: a UTF-8 CSV of ``path,class,split`` rows."""

import csv
import io
import logging
import math
import os
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import ConfigError, ContractError
from ..models import SPLITS, DatasetManifest, ManifestEntry
from ..runlog import atomic_write

logger = logging.getLogger(__name__)

MANIFEST_HEADER = ("path", "class", "split")
CLOUD_SUFFIXES = (".xyz", ".txt", ".pts")


def read_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Load a manifest; class names come out sorted lexicographically."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise ContractError(f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}")
        entries = []
        for row_no, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ContractError(f"{path}:{row_no}: expected 3 columns, found {len(row)}")
            file_path, class_name, split = (cell.strip() for cell in row)
            entries.append(ManifestEntry(path=file_path, class_name=class_name, split=split))

    manifest = DatasetManifest(
        entries=entries,
        class_names=sorted({e.class_name for e in entries}),
    )
    manifest.validate()
    return manifest


def format_manifest(manifest: DatasetManifest) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in manifest.entries:
        writer.writerow([e.path, e.class_name, e.split])
    return buf.getvalue()


def write_manifest(path: Union[str, Path], manifest: DatasetManifest) -> Path:
    return atomic_write(path, format_manifest(manifest))


def resolve_entry_path(manifest_path: Union[str, Path], entry: ManifestEntry) -> Path:
    """Relative entry paths are taken relative to the manifest's directory."""
    p = Path(entry.path)
    return p if p.is_absolute() else Path(manifest_path).parent / p


def scan_class_directories(
    root: Union[str, Path], relative_to: Optional[Union[str, Path]] = None
) -> list[tuple[str, str]]:
    """Each subdirectory of ``root`` is a class; returns (path, class) pairs.

    Paths are relative to ``relative_to`` (default ``root``), which should be
    the directory the manifest is written to so that ``resolve_entry_path``
    finds the files again.
    """
    root = Path(root)
    base = Path(relative_to if relative_to is not None else root).resolve()
    if not root.is_dir():
        raise ContractError(f"{root} is not a directory")
    items = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(
            f for f in class_dir.iterdir()
            if f.is_file() and f.suffix.lower() in CLOUD_SUFFIXES
        )
        if not files:
            logger.warning(f"Class directory {class_dir.name} has no cloud files")
            continue
        items.extend(
            (Path(os.path.relpath(f.resolve(), base)).as_posix(), class_dir.name) for f in files
        )
    logger.info(f"Found {len(items)} files in {root}")
    return items


def split_manifest(
    items: list[tuple[str, str]], test_fraction: float = 0.2, seed: int = 0
) -> DatasetManifest:
    """Stratified split: ``floor(n_class * test_fraction)`` test files per class."""
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in [0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    class_names = sorted({c for _, c in items})
    split_of: dict[str, str] = {}
    for class_name in class_names:
        paths = [p for p, c in items if c == class_name]
        # 1e-9 absorbs binary error in fractions like 0.2 * 10
        n_test = math.floor(len(paths) * test_fraction + 1e-9)
        test_idx = set(rng.permutation(len(paths))[:n_test].tolist())
        for i, p in enumerate(paths):
            split_of[p] = SPLITS[1] if i in test_idx else SPLITS[0]

    entries = [ManifestEntry(path=p, class_name=c, split=split_of[p]) for p, c in items]
    manifest = DatasetManifest(entries=entries, class_names=class_names)
    manifest.validate()
    return manifest


def build_manifest(
    root: Union[str, Path],
    test_fraction: float = 0.2,
    seed: int = 0,
    relative_to: Optional[Union[str, Path]] = None,
) -> DatasetManifest:
    return split_manifest(scan_class_directories(root, relative_to), test_fraction, seed)


def class_counts(manifest: DatasetManifest, split: str = "train") -> np.ndarray:
    """Per-class entry counts for one split, indexed like ``class_names``."""
    counts = np.zeros(len(manifest.class_names), dtype=np.int64)
    for e in manifest.split(split):
        counts[manifest.label_of(e.class_name)] += 1
    return counts
