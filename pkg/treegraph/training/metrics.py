"""Confusion-matrix metrics: OA, BA, per-class precision/recall, Cohen's kappa."""

import logging
import time
from typing import Optional, Union

import numpy as np

from ..autodiff.checkpoint import checkpoint_size_mb
from ..autodiff.tensor import no_grad
from ..data.cloud_io import PackedDataset
from ..errors import ContractError
from ..models import ClassWeights, MetricsReport
from .loss import weighted_cross_entropy

logger = logging.getLogger(__name__)


def confusion_matrix(y_true, y_pred, num_classes: int) -> np.ndarray:
    """C x C counts, rows = truth, columns = prediction."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ContractError(f"label shapes differ: {y_true.shape} vs {y_pred.shape}")
    for name, y in (("truth", y_true), ("prediction", y_pred)):
        if y.size and (y.min() < 0 or y.max() >= num_classes):
            raise ContractError(f"{name} labels must lie in [0, {num_classes})")
    flat = np.bincount(y_true * num_classes + y_pred, minlength=num_classes * num_classes)
    return flat.reshape(num_classes, num_classes)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros(num.shape, dtype=np.float64), where=den > 0)


def cohen_kappa(confusion: np.ndarray) -> float:
    """(p_o - p_e) / (1 - p_e); when p_e == 1 the result is 1 if p_o == 1 else 0."""
    cm = np.asarray(confusion, dtype=np.float64)
    total = cm.sum()
    po = np.trace(cm) / total
    pe = float((cm.sum(axis=1) * cm.sum(axis=0)).sum()) / (total * total)
    if pe == 1.0:
        return 1.0 if po == 1.0 else 0.0
    return float((po - pe) / (1.0 - pe))


def metrics_from_confusion(
    confusion: np.ndarray, class_names: Optional[list[str]] = None
) -> MetricsReport:
    """All report figures (percentages) from a confusion matrix.

    Classes with no true samples get recall 0 and classes never predicted
    get precision 0; both are logged as warnings.
    """
    cm = np.asarray(confusion, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ContractError(f"confusion matrix must be square, got shape {cm.shape}")
    total = cm.sum()
    if total == 0:
        raise ContractError("confusion matrix is empty")
    names = list(class_names) if class_names else [str(i) for i in range(cm.shape[0])]

    diag = np.diag(cm).astype(np.float64)
    rows = cm.sum(axis=1)
    cols = cm.sum(axis=0)
    recall = _safe_ratio(diag, rows)
    precision = _safe_ratio(diag, cols)
    no_truth = [names[i] for i in np.flatnonzero(rows == 0)]
    if no_truth:
        logger.warning(f"No test samples for classes {no_truth}; recall counted as 0")
    never_predicted = [names[i] for i in np.flatnonzero(cols == 0)]
    if never_predicted:
        logger.warning(f"Classes {never_predicted} never predicted; precision counted as 0")

    return MetricsReport(
        confusion=cm,
        oa=100.0 * float(diag.sum()) / float(total),
        ba=100.0 * float(recall.mean()),
        kappa=cohen_kappa(cm),
        per_class_precision=100.0 * precision,
        per_class_recall=100.0 * recall,
        class_names=names,
    )


def predict(model, points: np.ndarray, batch_size: int = 16,
            labels: Optional[np.ndarray] = None,
            weights: Optional[Union[ClassWeights, np.ndarray]] = None) -> tuple[np.ndarray, Optional[float]]:
    """Eval-mode predictions for B x N x 3 points; also the mean loss when labels are given."""
    model.eval()
    preds = []
    loss_sum = 0.0
    with no_grad():
        for start in range(0, len(points), batch_size):
            chunk = np.ascontiguousarray(points[start:start + batch_size].transpose(0, 2, 1))
            logits = model(chunk)
            preds.append(np.argmax(logits.data, axis=1))
            if labels is not None:
                batch_labels = labels[start:start + batch_size]
                loss = weighted_cross_entropy(logits, batch_labels, weights)
                loss_sum += loss.item() * len(batch_labels)
    pred = np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)
    mean_loss = loss_sum / len(points) if labels is not None and len(points) else None
    return pred, mean_loss


def evaluate(
    model,
    dataset: PackedDataset,
    batch_size: int = 16,
    class_names: Optional[list[str]] = None,
    weights: Optional[Union[ClassWeights, np.ndarray]] = None,
) -> MetricsReport:
    """Run the model in eval mode over ``dataset`` and score it."""
    if len(dataset) == 0:
        raise ContractError("cannot evaluate on an empty test set")
    labels = np.asarray(dataset.labels, dtype=np.int64)
    start = time.perf_counter()
    pred, loss = predict(model, dataset.points, batch_size, labels, weights)
    elapsed = time.perf_counter() - start

    names = class_names or dataset.class_names or None
    report = metrics_from_confusion(confusion_matrix(labels, pred, model.cfg.num_classes), names)
    report.loss = loss
    report.epoch_time = elapsed
    report.parameter_count = model.parameter_count()
    report.model_size_mb = checkpoint_size_mb(model)
    return report


def format_confusion_csv(report: MetricsReport) -> str:
    """Header row of class names, then one row per true class."""
    lines = ["truth\\pred," + ",".join(report.class_names)]
    for name, row in zip(report.class_names, report.confusion):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"
