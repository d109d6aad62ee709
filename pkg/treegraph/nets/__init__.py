"""Network variant registry."""

import json
from pathlib import Path
from typing import Optional, Type, Union

from ..autodiff.checkpoint import load_checkpoint, save_checkpoint
from ..errors import CheckpointError, ConfigError
from ..models import ModelConfig, config_from_dict, config_to_dict
from ..runlog import atomic_write
from .base import PointCloudClassifier

CHECKPOINT_NAME = "model.tgnw"
MODEL_CONFIG_NAME = "model.json"

# Registry of all network variants
_VARIANTS: dict[str, Type[PointCloudClassifier]] = {}


def register_variant(cls: Type[PointCloudClassifier]) -> Type[PointCloudClassifier]:
    """Decorator to register a classifier class under its ``name``."""
    _VARIANTS[cls.name] = cls
    return cls


def get_variant(name: str) -> Type[PointCloudClassifier]:
    try:
        return _VARIANTS[name]
    except KeyError:
        raise ConfigError(f"unknown variant {name!r}; expected one of {sorted(_VARIANTS)}") from None


def available_variants() -> list[str]:
    return list(_VARIANTS)


def build_variant(cfg: ModelConfig) -> PointCloudClassifier:
    """Instantiate the network named by ``cfg.variant``."""
    cfg.validate()
    return get_variant(cfg.variant)(cfg)


def save_model(
    model: PointCloudClassifier, directory: Union[str, Path], class_names: Optional[list[str]] = None
) -> Path:
    """Write ``model.tgnw`` plus the ``model.json`` config it was built from."""
    directory = Path(directory)
    path = directory / CHECKPOINT_NAME
    size = save_checkpoint(model, path)
    meta = {
        "model": config_to_dict(model.cfg),
        "class_names": class_names or [],
        "parameter_count": model.parameter_count(),
        "checkpoint_bytes": size,
    }
    atomic_write(directory / MODEL_CONFIG_NAME, json.dumps(meta, indent=2) + "\n")
    return path


def load_model(directory: Union[str, Path]) -> tuple[PointCloudClassifier, dict]:
    """Rebuild a model from ``model.json`` and load its weights; returns (model, meta)."""
    directory = Path(directory)
    config_path = directory / MODEL_CONFIG_NAME
    if not config_path.exists():
        raise CheckpointError(f"no {MODEL_CONFIG_NAME} in {directory}")
    with open(config_path, encoding="utf-8") as f:
        meta = json.load(f)
    model = build_variant(config_from_dict(ModelConfig, meta["model"]))
    load_checkpoint(model, directory / CHECKPOINT_NAME)
    model.eval()
    return model, meta


# Import variants to trigger registration; order matches models.VARIANTS.
from . import msdgcnn_pp  # noqa: F401, E402
from . import msdgcnn_parallel  # noqa: F401, E402
from . import dgcnn  # noqa: F401, E402

