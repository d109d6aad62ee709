"""Exception hierarchy shared by every treegraph module."""

from pathlib import Path
from typing import Optional


class TreeGraphError(Exception):
    """Base class for all errors raised by treegraph."""


class ContractError(TreeGraphError, ValueError):
    """A precondition of an operation was violated."""


class ShapeError(ContractError):
    """Input shapes do not conform to what an operation expects."""

    def __init__(self, op: str, message: str):
        super().__init__(f"{op}: {message}")
        self.op = op


class ConfigError(TreeGraphError, ValueError):
    """A configuration value is out of range or unknown."""


class CloudParseError(TreeGraphError):
    """A point-cloud file could not be parsed."""

    def __init__(self, path: Path | str, message: str, line: Optional[int] = None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = Path(path)
        self.line = line


class DegenerateCloudError(TreeGraphError):
    """A cloud has too few points or no spatial extent."""


class CheckpointError(TreeGraphError):
    """A checkpoint file is malformed or does not match the model."""


class TrainingError(TreeGraphError):
    """Training diverged; carries the offending batch index."""

    def __init__(self, message: str, batch_index: int, epoch: int):
        super().__init__(f"epoch {epoch}, batch {batch_index}: {message}")
        self.batch_index = batch_index
        self.epoch = epoch


class BatchJobError(TreeGraphError):
    """Too many items of a batch job failed; carries the per-item failures."""

    def __init__(self, message: str, failures: list[tuple[str, str]]):
        super().__init__(message)
        self.failures = failures
