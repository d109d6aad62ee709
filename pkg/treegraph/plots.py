"""Optional SVG line charts for training curves and k sweeps.

matplotlib is an optional extra (``pip install treegraph[plot]``); without
it the chart functions log a warning and return None, and the CSV
artifacts remain the source of truth.
"""

import importlib.util
import io
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

from .runlog import atomic_write

logger = logging.getLogger(__name__)

MATPLOTLIB_AVAILABLE = importlib.util.find_spec("matplotlib") is not None


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(plt, fig, out_path: Union[str, Path]) -> Path:
    """Render to memory, then move the finished SVG into place."""
    buf = io.BytesIO()
    try:
        fig.savefig(buf, format="svg")
    finally:
        plt.close(fig)
    return atomic_write(out_path, buf.getvalue())


def _floats(rows: Sequence[dict], key: str) -> list[Optional[float]]:
    return [float(r[key]) if r.get(key) not in (None, "") else None for r in rows]


def plot_training_curves(rows: Sequence[dict], out_path: Union[str, Path]) -> Optional[Path]:
    """Loss and test-accuracy curves from ``epochs.csv`` rows."""
    if not MATPLOTLIB_AVAILABLE:
        logger.warning("matplotlib not installed; skipping training curves (pip install treegraph[plot])")
        return None
    if not rows:
        return None
    plt = _pyplot()
    epochs = [int(r["epoch"]) + 1 for r in rows]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))

    ax_loss.plot(epochs, _floats(rows, "train_loss"), label="train")
    test_loss = _floats(rows, "test_loss")
    if any(v is not None for v in test_loss):
        ax_loss.plot(epochs, test_loss, label="test")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("weighted cross-entropy")
    ax_loss.legend()

    for key, label in (("test_oa", "OA"), ("test_ba", "BA")):
        values = _floats(rows, key)
        if any(v is not None for v in values):
            ax_acc.plot(epochs, values, label=label)
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("%")
    ax_acc.legend()

    fig.tight_layout()
    out_path = _save(plt, fig, out_path)
    logger.debug(f"Wrote {out_path}")
    return out_path


def plot_sweep(rows: Sequence[dict], out_path: Union[str, Path]) -> Optional[Path]:
    """OA / BA per scale triple, in sweep order."""
    if not MATPLOTLIB_AVAILABLE:
        logger.warning("matplotlib not installed; skipping sweep chart (pip install treegraph[plot])")
        return None
    if not rows:
        return None
    plt = _pyplot()
    labels = [f"{r['k1']},{r['k2']},{r['k3']}" for r in rows]
    x = list(range(len(rows)))
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(rows)), 4))
    ax.plot(x, _floats(rows, "oa"), marker="o", label="OA")
    ax.plot(x, _floats(rows, "ba"), marker="s", label="BA")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_xlabel("k1,k2,k3")
    ax.set_ylabel("%")
    ax.legend()
    fig.tight_layout()
    return _save(plt, fig, out_path)
