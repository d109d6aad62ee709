"""Point-cloud file formats: ASCII xyz and the packed "TGPC" batch format.

TGPC layout (little-endian)::

    b"TGPC" | u32 sample count | u32 N | u32 D | per sample: N*D f32, u16 label
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import CloudParseError, ContractError, DegenerateCloudError
from ..models import PointCloudSample
from ..runlog import atomic_write

logger = logging.getLogger(__name__)

PACKED_MAGIC = b"TGPC"
MIN_POINTS = 4
FORMATS = ("xyz_ascii", "packed_binary")
DATASET_INFO_NAME = "dataset.json"

_SUFFIX_FORMATS = {
    ".xyz": "xyz_ascii",
    ".txt": "xyz_ascii",
    ".pts": "xyz_ascii",
    ".tgpc": "packed_binary",
}


@dataclass
class PackedDataset:
    """A fixed-size batch of clouds: points B x N x D float32, labels u16."""

    points: np.ndarray
    labels: np.ndarray
    class_names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def num_points(self) -> int:
        return int(self.points.shape[1])

    def sample(self, i: int) -> PointCloudSample:
        return PointCloudSample(points=self.points[i], label=int(self.labels[i]))


def infer_format(path: Union[str, Path]) -> str:
    suffix = Path(path).suffix.lower()
    try:
        return _SUFFIX_FORMATS[suffix]
    except KeyError:
        raise CloudParseError(path, f"cannot infer format from suffix {suffix!r}") from None


def parse_xyz(text: str, path: Union[str, Path] = "<string>") -> np.ndarray:
    """Parse one "x y z" triple per line; '#' starts a comment."""
    rows: list[tuple[float, float, float]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 3:
            raise CloudParseError(path, f"expected 3 values, found {len(fields)}", line=line_no)
        try:
            x, y, z = (float(v) for v in fields)
        except ValueError:
            raise CloudParseError(path, f"non-numeric value in {line!r}", line=line_no) from None
        if not all(np.isfinite((x, y, z))):
            raise CloudParseError(path, "non-finite coordinate", line=line_no)
        rows.append((x, y, z))
    return np.array(rows, dtype=np.float32).reshape(-1, 3)


def _check_points(points: np.ndarray, path: Union[str, Path]) -> None:
    if points.shape[0] < MIN_POINTS:
        raise DegenerateCloudError(
            f"{path}: cloud has {points.shape[0]} points, need at least {MIN_POINTS}"
        )


def load_cloud(path: Union[str, Path], format: Optional[str] = None) -> PointCloudSample:
    """Read a cloud in file order; no normalization is applied.

    For packed files the first sample is returned.
    """
    path = Path(path)
    fmt = format or infer_format(path)
    if fmt not in FORMATS:
        raise CloudParseError(path, f"unknown format {fmt!r}; expected one of {FORMATS}")

    if fmt == "xyz_ascii":
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise CloudParseError(path, f"not UTF-8 text: {e}") from e
        points = parse_xyz(text, path)
        _check_points(points, path)
        return PointCloudSample(points=points, source_path=str(path))

    dataset = read_packed(path)
    if len(dataset) == 0:
        raise DegenerateCloudError(f"{path}: packed file holds no samples")
    _check_points(dataset.points[0], path)
    sample = dataset.sample(0)
    sample.source_path = str(path)
    return sample


def format_xyz(points: np.ndarray) -> str:
    """Shortest float32 round-trip text, one triple per line."""
    values = np.asarray(points, dtype=np.float32)
    lines = [
        " ".join(np.format_float_positional(v, unique=True, trim="-") for v in row)
        for row in values
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_xyz(path: Union[str, Path], points: np.ndarray) -> Path:
    return atomic_write(path, format_xyz(points))


def _record_dtype(n: int, d: int) -> np.dtype:
    return np.dtype([("points", "<f4", (n, d)), ("label", "<u2")])


def pack_dataset(dataset: PackedDataset) -> bytes:
    points = np.asarray(dataset.points, dtype=np.float32)
    if points.ndim != 3:
        raise ContractError(f"packed points must be B x N x D, got shape {points.shape}")
    count, n, d = points.shape
    labels = np.asarray(dataset.labels)
    if labels.shape != (count,):
        raise ContractError(f"labels shape {labels.shape} != ({count},)")
    if labels.size and (labels.min() < 0 or labels.max() > np.iinfo(np.uint16).max):
        raise ContractError("labels must fit in u16")
    records = np.empty(count, dtype=_record_dtype(n, d))
    records["points"] = points
    records["label"] = labels
    return PACKED_MAGIC + struct.pack("<III", count, n, d) + records.tobytes()


def unpack_dataset(blob: bytes, path: Union[str, Path] = "<bytes>") -> PackedDataset:
    if blob[:4] != PACKED_MAGIC:
        raise CloudParseError(path, f"bad magic {blob[:4]!r}, expected {PACKED_MAGIC!r}")
    if len(blob) < 16:
        raise CloudParseError(path, "truncated header")
    count, n, d = struct.unpack_from("<III", blob, 4)
    dtype = _record_dtype(n, d)
    expected = 16 + count * dtype.itemsize
    if len(blob) != expected:
        raise CloudParseError(path, f"size {len(blob)} bytes, header implies {expected}")
    records = np.frombuffer(blob, dtype=dtype, count=count, offset=16)
    return PackedDataset(
        points=np.array(records["points"], dtype=np.float32),
        labels=np.array(records["label"], dtype=np.uint16),
    )


def write_packed(path: Union[str, Path], dataset: PackedDataset) -> Path:
    return atomic_write(path, pack_dataset(dataset))


def read_packed(path: Union[str, Path]) -> PackedDataset:
    path = Path(path)
    dataset = unpack_dataset(path.read_bytes(), path)
    info_path = path.parent / DATASET_INFO_NAME
    if info_path.exists():
        try:
            dataset.class_names = read_dataset_info(info_path).get("class_names", [])
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Ignoring unreadable {info_path}: {e}")
    return dataset


def write_dataset_info(out_dir: Union[str, Path], info: dict) -> Path:
    """Side file with class names, per-split counts and the sampling config."""
    return atomic_write(Path(out_dir) / DATASET_INFO_NAME, json.dumps(info, indent=2) + "\n")


def read_dataset_info(path: Union[str, Path]) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / DATASET_INFO_NAME
    with open(path, encoding="utf-8") as f:
        return json.load(f)
