"""Run bookkeeping: atomic artifact writes and the replay manifest."""

import json
import logging
import os
import subprocess
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

from .models import RunManifest

logger = logging.getLogger(__name__)

RUN_MANIFEST_NAME = "run_manifest.json"


def atomic_write(path: Union[str, Path], data: Union[bytes, str]) -> Path:
    """Write ``data`` to a temporary sibling and move it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    mode = "wb" if isinstance(data, bytes) else "w"
    try:
        with open(tmp, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def git_describe(cwd: Optional[Path] = None) -> str:
    """`git describe --always --dirty` for the source tree, or "unknown"."""
    cwd = cwd or Path(__file__).resolve().parent
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError) as e:
        logger.debug(f"git describe unavailable: {e}")
        return "unknown"
    if result.returncode != 0:
        return "unknown"
    return result.stdout.strip() or "unknown"


def start_run(command: str, config: dict, seed: Optional[int], argv: list[str]) -> RunManifest:
    return RunManifest(
        command=command,
        config=config,
        seed=seed,
        git_describe=git_describe(),
        started_at=datetime.now(),
        argv=list(argv),
    )


def manifest_to_dict(manifest: RunManifest) -> dict:
    return {
        "command": manifest.command,
        "config": manifest.config,
        "seed": manifest.seed,
        "git_describe": manifest.git_describe,
        "started_at": manifest.started_at.isoformat(),
        "finished_at": manifest.finished_at.isoformat() if manifest.finished_at else None,
        "argv": manifest.argv,
        "artifacts": manifest.artifacts,
    }


def write_run_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    """Stamp the finish time and write ``run_manifest.json`` into ``out_dir``."""
    manifest.finished_at = datetime.now()
    path = Path(out_dir) / RUN_MANIFEST_NAME
    atomic_write(path, json.dumps(manifest_to_dict(manifest), indent=2) + "\n")
    logger.debug(f"Wrote run manifest {path}")
    return path


def read_run_manifest(path: Union[str, Path]) -> RunManifest:
    path = Path(path)
    if path.is_dir():
        path = path / RUN_MANIFEST_NAME
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    finished = data.get("finished_at")
    return RunManifest(
        command=data["command"],
        config=data.get("config", {}),
        seed=data.get("seed"),
        git_describe=data.get("git_describe", "unknown"),
        started_at=datetime.fromisoformat(data["started_at"]),
        finished_at=datetime.fromisoformat(finished) if finished else None,
        argv=data.get("argv", []),
        artifacts=data.get("artifacts", []),
    )
