"""Dataset I/O: cloud files, manifests, normalization and class weights."""

from .cloud_io import (
    DATASET_INFO_NAME,
    PACKED_MAGIC,
    PackedDataset,
    load_cloud,
    read_dataset_info,
    read_packed,
    write_dataset_info,
    write_packed,
    write_xyz,
)
from .manifest import (
    build_manifest,
    class_counts,
    read_manifest,
    resolve_entry_path,
    scan_class_directories,
    split_manifest,
    write_manifest,
)
from .transforms import compute_class_weights, normalize_points, normalize_unit_sphere

__all__ = [
    "DATASET_INFO_NAME",
    "PACKED_MAGIC",
    "PackedDataset",
    "load_cloud",
    "read_dataset_info",
    "read_packed",
    "write_dataset_info",
    "write_packed",
    "write_xyz",
    "build_manifest",
    "class_counts",
    "read_manifest",
    "resolve_entry_path",
    "scan_class_directories",
    "split_manifest",
    "write_manifest",
    "compute_class_weights",
    "normalize_points",
    "normalize_unit_sphere",
]
