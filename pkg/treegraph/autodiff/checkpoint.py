"""Binary weight checkpoints (magic "TGNW").

Layout, all little-endian::

    b"TGNW" | u8 version | u32 entry count
    per entry: u16 name length | name (UTF-8) | u8 ndim | ndim x u32 | f32 data

Parameters come first, then batch-norm buffers, each in registry order.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import CheckpointError
from ..runlog import atomic_write
from .layers import Module

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"TGNW"
CHECKPOINT_VERSION = 1


def serialize_state(state: dict[str, np.ndarray]) -> bytes:
    parts = [CHECKPOINT_MAGIC, struct.pack("<BI", CHECKPOINT_VERSION, len(state))]
    for name, array in state.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
        parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return b"".join(parts)


def deserialize_state(blob: bytes) -> dict[str, np.ndarray]:
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {blob[:4]!r}")
    try:
        version, count = struct.unpack_from("<BI", blob, 4)
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        offset = 9
        state: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", blob, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", blob, offset)
            offset += 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            data = np.frombuffer(blob, dtype="<f4", count=size, offset=offset)
            offset += 4 * size
            state[name] = data.reshape(shape).astype(np.float32)
    except (struct.error, ValueError, UnicodeDecodeError) as e:
        raise CheckpointError(f"truncated or corrupt checkpoint: {e}") from e
    if offset != len(blob):
        raise CheckpointError(f"{len(blob) - offset} trailing bytes after {count} entries")
    return state


def save_checkpoint(model: Module, path: Union[str, Path]) -> int:
    """Write the model's parameters and buffers; returns the byte size."""
    blob = serialize_state(model.state_dict())
    atomic_write(path, blob)
    logger.debug(f"Saved checkpoint {path} ({len(blob)} bytes)")
    return len(blob)


def load_state_into(model: Module, state: dict[str, np.ndarray]) -> None:
    params = dict(model.named_parameters())
    buffers = {}
    for module_name, module in model.named_modules():
        for buf in getattr(module, "_buffer_names", ()):
            full = f"{module_name}.{buf}" if module_name else buf
            buffers[full] = (module, buf)

    expected = set(params) | set(buffers)
    missing = sorted(expected - set(state))
    unexpected = sorted(set(state) - expected)
    if missing or unexpected:
        raise CheckpointError(
            f"checkpoint does not match model: missing={missing[:5]} unexpected={unexpected[:5]}"
        )
    for name, p in params.items():
        if state[name].shape != p.shape:
            raise CheckpointError(f"{name}: checkpoint shape {state[name].shape} != {p.shape}")
        p.data = state[name].astype(p.dtype, copy=True)
        p.grad = None
    for name, (module, buf) in buffers.items():
        current = getattr(module, buf)
        if state[name].shape != current.shape:
            raise CheckpointError(f"{name}: checkpoint shape {state[name].shape} != {current.shape}")
        setattr(module, buf, state[name].astype(current.dtype, copy=True))


def load_checkpoint(model: Module, path: Union[str, Path]) -> Module:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    load_state_into(model, deserialize_state(path.read_bytes()))
    logger.debug(f"Loaded checkpoint {path}")
    return model


def checkpoint_size_mb(model: Module) -> float:
    """Serialized size in MiB, reported as the model-size metric."""
    return len(serialize_state(model.state_dict())) / float(1 << 20)
