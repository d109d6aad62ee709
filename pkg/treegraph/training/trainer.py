"""Training loop: weighted loss, Adam, cosine schedule, per-epoch CSV, best checkpoint."""

import csv
import io
import logging
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional, Union

import numpy as np

from ..augment import augment_batch
from ..data.cloud_io import PackedDataset
from ..data.transforms import normalize_points
from ..errors import DegenerateCloudError, TrainingError
from ..models import AugmentConfig, ClassWeights, MetricsReport, TrainConfig
from ..nets import save_model
from ..nets.base import PointCloudClassifier
from ..runlog import atomic_write
from .loss import weighted_cross_entropy
from .metrics import evaluate
from .optim import Adam, cosine_lr

logger = logging.getLogger(__name__)

EPOCH_CSV_NAME = "epochs.csv"
EPOCH_CSV_HEADER = (
    "epoch", "lr", "train_loss", "test_loss", "test_oa", "test_ba", "test_kappa", "epoch_time_s",
)
DROPOUT_SEED_OFFSET = 1000


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_oa: float
    epoch_time_s: float
    test: Optional[MetricsReport] = None

    def csv_row(self) -> list:
        t = self.test
        return [
            self.epoch,
            f"{self.lr:.8g}",
            f"{self.train_loss:.8g}",
            "" if t is None or t.loss is None else f"{t.loss:.8g}",
            "" if t is None else repr(t.oa),
            "" if t is None else repr(t.ba),
            "" if t is None else repr(t.kappa),
            f"{self.epoch_time_s:.4f}",
        ]


@dataclass
class TrainResult:
    best_epoch: int
    best_report: Optional[MetricsReport]
    history: list[EpochRecord] = field(default_factory=list)
    checkpoint_dir: Optional[Path] = None
    csv_path: Optional[Path] = None


def format_epoch_csv(history: list[EpochRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EPOCH_CSV_HEADER)
    for record in history:
        writer.writerow(record.csv_row())
    return buf.getvalue()


def read_epoch_csv(path: Union[str, Path]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


class BatchLoader:
    """Assembles (and optionally augments) batches one step ahead on a worker thread.

    The data order is drawn in the calling thread at the start of each
    epoch; augmentation draws come from a dedicated generator consumed
    in batch order by the single worker, so results are deterministic.
    """

    def __init__(
        self,
        dataset: PackedDataset,
        batch_size: int,
        seed: int,
        augment_cfg: Optional[AugmentConfig] = None,
        renormalize: bool = False,
    ):
        self.dataset = dataset
        self.batch_size = batch_size
        self.order_rng = np.random.default_rng(seed)
        self.augment_cfg = augment_cfg
        self.augment_rng = np.random.default_rng(augment_cfg.seed) if augment_cfg else None
        self.renormalize = renormalize

    def _assemble(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.ascontiguousarray(self.dataset.points[idx].transpose(0, 2, 1))
        if self.augment_cfg is not None:
            points = augment_batch(points, self.augment_cfg, rng=self.augment_rng)
            if self.renormalize:
                points = np.stack([self._renormalize(p) for p in points])
        return points, np.asarray(self.dataset.labels[idx], dtype=np.int64)

    @staticmethod
    def _renormalize(sample: np.ndarray) -> np.ndarray:
        try:
            return normalize_points(sample.T).T
        except DegenerateCloudError:
            return sample

    def epoch(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        order = self.order_rng.permutation(len(self.dataset))
        chunks = [order[i:i + self.batch_size] for i in range(0, len(order), self.batch_size)]
        if len(chunks) > 1 and len(chunks[-1]) == 1:
            # a lone trailing sample would give the head batch norm nothing to normalize
            last = chunks.pop()
            chunks[-1] = np.concatenate([chunks[-1], last])
        with ThreadPoolExecutor(max_workers=1, thread_name_prefix="tg-batch") as pool:
            pending: Optional[Future] = pool.submit(self._assemble, chunks[0]) if chunks else None
            for i in range(len(chunks)):
                batch = pending.result()
                pending = pool.submit(self._assemble, chunks[i + 1]) if i + 1 < len(chunks) else None
                yield batch


def train(
    model: PointCloudClassifier,
    train_set: PackedDataset,
    cfg: TrainConfig,
    weights: Optional[ClassWeights] = None,
    test_set: Optional[PackedDataset] = None,
    out_dir: Optional[Union[str, Path]] = None,
    augment_cfg: Optional[AugmentConfig] = None,
    class_names: Optional[list[str]] = None,
    progress_callback: Optional[Callable[[int, int, str], None]] = None,
) -> TrainResult:
    """Train ``model`` in place.

    Class weights must come from the train split. With a test set, the
    epoch with the best test OA is checkpointed (earliest wins ties);
    without one, the last epoch is kept. ``epochs.csv`` and the checkpoint
    directory ``best/`` are written under ``out_dir`` when given.
    """
    cfg.validate()
    if len(train_set) == 0:
        raise TrainingError("empty training set", batch_index=-1, epoch=0)
    if cfg.eta_min >= cfg.lr:
        logger.warning(f"eta_min ({cfg.eta_min}) >= lr ({cfg.lr}): learning rate is constant")

    out_dir = Path(out_dir) if out_dir is not None else None
    class_names = class_names or train_set.class_names or None
    active_augment = (augment_cfg or AugmentConfig(seed=cfg.seed)) if cfg.augment else None
    loader = BatchLoader(
        train_set,
        cfg.batch_size,
        cfg.seed,
        augment_cfg=active_augment,
        renormalize=not cfg.normalize_before_augment,
    )
    model.reseed_dropout(cfg.seed + DROPOUT_SEED_OFFSET)
    optimizer = Adam(model.parameters(), cfg.lr, cfg.betas, cfg.adam_eps, cfg.weight_decay)

    result = TrainResult(best_epoch=-1, best_report=None)
    best_oa = -np.inf
    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg)
        model.train()
        loss_sum, correct, seen, compute_time = 0.0, 0, 0, 0.0
        for batch_index, (points, labels) in enumerate(loader.epoch()):
            start = time.perf_counter()
            logits = model(points)
            loss = weighted_cross_entropy(logits, labels, weights)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss {value}", batch_index=batch_index, epoch=epoch)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step(lr)
            compute_time += time.perf_counter() - start

            loss_sum += value * len(labels)
            correct += int((np.argmax(logits.data, axis=1) == labels).sum())
            seen += len(labels)

        record = EpochRecord(
            epoch=epoch,
            lr=lr,
            train_loss=loss_sum / seen,
            train_oa=100.0 * correct / seen,
            epoch_time_s=compute_time,
        )
        if test_set is not None and len(test_set):
            record.test = evaluate(model, test_set, cfg.eval_batch_size, class_names, weights)
            record.test.epoch_time = compute_time
        result.history.append(record)

        improved = record.test is None or record.test.oa > best_oa
        if improved:
            best_oa = record.test.oa if record.test is not None else best_oa
            result.best_epoch = epoch
            result.best_report = record.test
            if out_dir is not None:
                result.checkpoint_dir = out_dir / "best"
                save_model(model, result.checkpoint_dir, class_names)

        if out_dir is not None:
            result.csv_path = atomic_write(out_dir / EPOCH_CSV_NAME, format_epoch_csv(result.history))

        summary = f"epoch {epoch + 1}/{cfg.epochs} lr={lr:.3g} loss={record.train_loss:.4f} train_oa={record.train_oa:.1f}"
        if record.test is not None:
            summary += f" test_oa={record.test.oa:.1f} kappa={record.test.kappa:.3f}"
        logger.info(summary)
        if progress_callback:
            progress_callback(epoch + 1, cfg.epochs, summary)

    return result
