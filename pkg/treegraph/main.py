#!/usr/bin/env python3
"""treegraph - multi-scale graph networks for tree point-cloud classification.

Entry point for the CLI application.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from .errors import BatchJobError, ConfigError, ContractError, TreeGraphError
from .models import (
    VARIANTS,
    AugmentConfig,
    ModelConfig,
    SamplingConfig,
    ScaleTriple,
    TrainConfig,
    config_from_dict,
    config_to_dict,
)
from .runlog import atomic_write, start_run, write_run_manifest

logger = logging.getLogger("treegraph")
console = Console()

FAILURE_THRESHOLD = 0.10
SWEEP_CSV_NAME = "sweep.csv"
SWEEP_CSV_HEADER = ("k1", "k2", "k3", "oa", "ba", "kappa", "epoch_time")
CONFIG_SECTIONS = {
    "sampling": SamplingConfig,
    "augment": AugmentConfig,
    "model": ModelConfig,
    "train": TrainConfig,
}


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=verbose)],
        force=True,
    )


def worker_count() -> int:
    """Worker threads from ``TG_THREADS``; unset or invalid means ``os.cpu_count()``."""
    raw = os.environ.get("TG_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
            if n >= 1:
                return n
        except ValueError:
            pass
        logger.warning(f"Ignoring invalid TG_THREADS={raw!r}")
    return os.cpu_count() or 1


def load_config_file(path: Optional[str]) -> dict:
    """``--config`` JSON: one object per section (sampling, augment, model, train)."""
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}; expected {sorted(CONFIG_SECTIONS)}")
    return data


def merged_config(args, section: str, **flags):
    """Flag > config file > dataclass default."""
    data = dict(args.config_data.get(section, {}))
    data.update({k: v for k, v in flags.items() if v is not None})
    cfg = config_from_dict(CONFIG_SECTIONS[section], data)
    cfg.validate()
    return cfg


def _progress() -> Progress:
    return Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(bar_width=40),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def _finish(manifest, out_dir: Path, artifacts: list[Path]) -> None:
    manifest.artifacts = [str(p) for p in artifacts]
    write_run_manifest(manifest, out_dir)


def _metrics_table(title: str, report) -> Table:
    table = Table(title=title)
    table.add_column("class")
    table.add_column("precision %", justify="right")
    table.add_column("recall %", justify="right")
    for name, p, r in zip(report.class_names, report.per_class_precision, report.per_class_recall):
        table.add_row(name, f"{p:.2f}", f"{r:.2f}")
    table.caption = f"OA {report.oa:.2f}%  BA {report.ba:.2f}%  kappa {report.kappa:.4f}"
    return table


def cmd_synth(args):
    """Generate the synthetic three-class tree dataset."""
    from .data.synth import write_synthetic_dataset

    out = Path(args.out)
    config = {
        "per_class": args.per_class,
        "seed": args.seed,
        "points": args.points,
        "test_fraction": args.test_fraction,
    }
    run = start_run("synth", config, args.seed, args.argv)
    manifest = write_synthetic_dataset(out, args.per_class, args.seed, args.points, args.test_fraction)

    train_n = len(manifest.split("train"))
    test_n = len(manifest.split("test"))
    console.print(f"[green]✓[/] {len(manifest.entries)} clouds in {out} ({train_n} train / {test_n} test)")
    _finish(run, out, [out / "manifest.csv"])


def cmd_manifest(args):
    """Build a manifest from class subdirectories."""
    from .data.manifest import build_manifest, class_counts, write_manifest

    out = Path(args.out)
    config = {"root": str(args.root), "test_fraction": args.test_fraction, "seed": args.seed}
    run = start_run("manifest", config, args.seed, args.argv)
    manifest = build_manifest(args.root, args.test_fraction, args.seed, relative_to=out.parent)
    write_manifest(out, manifest)

    table = Table(title=f"Manifest {out}")
    table.add_column("class")
    table.add_column("train", justify="right")
    table.add_column("test", justify="right")
    for name, n_train, n_test in zip(
        manifest.class_names, class_counts(manifest, "train"), class_counts(manifest, "test")
    ):
        table.add_row(name, str(n_train), str(n_test))
    console.print(table)
    _finish(run, out.parent, [out])


def cmd_preprocess(args):
    """Voxel-reduce, FPS and normalize every manifest entry into TGPC files."""
    from .data.cloud_io import PackedDataset, load_cloud, write_dataset_info, write_packed
    from .data.manifest import class_counts, read_manifest, resolve_entry_path
    from .sampling import preprocess_cloud

    cfg = merged_config(
        args,
        "sampling",
        target_points=args.points,
        voxel_target=args.voxel_target,
        voxel_tolerance=args.voxel_tolerance,
        seed=args.seed,
    )
    out = Path(args.out)
    run = start_run("preprocess", {"manifest": str(args.manifest), "sampling": config_to_dict(cfg)},
                    cfg.seed, args.argv)
    manifest = read_manifest(args.manifest)
    entries = manifest.entries
    if not entries:
        raise ContractError(f"manifest {args.manifest} has no entries")

    def process(entry):
        cloud = load_cloud(resolve_entry_path(args.manifest, entry))
        return preprocess_cloud(cloud.points, cfg)

    workers = worker_count()
    logger.info(f"Preprocessing {len(entries)} clouds with {workers} workers")
    results: list[Optional[np.ndarray]] = [None] * len(entries)
    failures: list[tuple[str, str]] = []
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="tg-pre") as pool, _progress() as progress:
        task = progress.add_task("preprocess", total=len(entries))
        futures = [pool.submit(process, e) for e in entries]
        for i, (entry, future) in enumerate(zip(entries, futures)):
            try:
                results[i] = future.result()
            except (TreeGraphError, OSError) as e:
                logger.warning(f"Failed to preprocess {entry.path}: {e}")
                failures.append((entry.path, str(e)))
            progress.advance(task)

    if len(failures) > FAILURE_THRESHOLD * len(entries):
        raise BatchJobError(
            f"{len(failures)} of {len(entries)} files failed (limit {FAILURE_THRESHOLD:.0%})", failures
        )

    artifacts = []
    counts = {}
    for split in ("train", "test"):
        idx = [i for i, e in enumerate(entries) if e.split == split and results[i] is not None]
        points = (
            np.stack([results[i] for i in idx])
            if idx
            else np.zeros((0, cfg.target_points, 3), dtype=np.float32)
        )
        labels = np.array([manifest.label_of(entries[i].class_name) for i in idx], dtype=np.uint16)
        artifacts.append(write_packed(out / f"{split}.tgpc", PackedDataset(points, labels)))
        counts[split] = len(idx)

    info = {
        "class_names": manifest.class_names,
        "counts": counts,
        "train_class_counts": class_counts(manifest, "train").tolist(),
        "sampling": config_to_dict(cfg),
        "skipped": [{"path": p, "error": msg} for p, msg in failures],
    }
    artifacts.append(write_dataset_info(out, info))

    console.print(
        f"[green]✓[/] {counts['train']} train / {counts['test']} test samples of "
        f"{cfg.target_points} points written to {out}"
    )
    if failures:
        console.print(f"[yellow]![/] {len(failures)} files skipped (see dataset.json)")
    _finish(run, out, artifacts)


def cmd_augment_preview(args):
    """Write original and augmented xyz pairs for a few training samples."""
    from .augment import augment_batch
    from .data.cloud_io import read_packed, write_xyz

    cfg = merged_config(
        args,
        "augment",
        sigma_j=args.sigma_j,
        rotate=args.rotate,
        delete=args.delete,
        s_min=args.scale_min,
        s_max=args.scale_max,
        seed=args.seed,
    )
    out = Path(args.out)
    run = start_run("augment-preview", {"data": str(args.data), "augment": config_to_dict(cfg)},
                    cfg.seed, args.argv)
    dataset = read_packed(Path(args.data) / f"{args.split}.tgpc")
    count = min(args.count, len(dataset))
    if count == 0:
        raise ContractError(f"{args.split} split of {args.data} is empty")

    batch = np.ascontiguousarray(dataset.points[:count].transpose(0, 2, 1))
    augmented = augment_batch(batch, cfg)
    artifacts = []
    for i in range(count):
        artifacts.append(write_xyz(out / f"{i:04d}_orig.xyz", batch[i].T))
        artifacts.append(write_xyz(out / f"{i:04d}_aug.xyz", augmented[i].T))
    console.print(f"[green]✓[/] {count} original/augmented pairs written to {out}")
    _finish(run, out, artifacts)


def _load_splits(data_dir: Path, require_test: bool = False):
    from .data.cloud_io import read_dataset_info, read_packed

    train_set = read_packed(data_dir / "train.tgpc")
    test_path = data_dir / "test.tgpc"
    test_set = read_packed(test_path) if test_path.exists() else None
    if test_set is not None and len(test_set) == 0:
        test_set = None
    if require_test and test_set is None:
        raise ContractError(f"{data_dir} has no test samples")
    info = read_dataset_info(data_dir) if (data_dir / "dataset.json").exists() else {}
    class_names = info.get("class_names") or train_set.class_names
    if not class_names:
        n = int(train_set.labels.max()) + 1 if len(train_set) else 0
        class_names = [str(i) for i in range(n)]
    return train_set, test_set, class_names


def _train_weights(train_set, num_classes: int):
    from .data.transforms import compute_class_weights

    counts = np.bincount(np.asarray(train_set.labels, dtype=np.int64), minlength=num_classes)
    return compute_class_weights(counts)


def _model_config(args, num_classes: int, scales: Optional[str] = None) -> ModelConfig:
    return merged_config(
        args,
        "model",
        variant=args.variant,
        num_classes=num_classes,
        scales=scales or args.scales,
        backbone_k=args.backbone_k,
        dropout=args.dropout,
        seed=args.seed,
    )


def _train_config(args) -> TrainConfig:
    return merged_config(
        args,
        "train",
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        eta_min=args.eta_min,
        weight_decay=args.weight_decay,
        augment=True if args.augment else None,
        seed=args.seed,
    )


def _run_training(args, model_cfg: ModelConfig, train_cfg: TrainConfig, train_set, test_set,
                  class_names: list[str], out: Path, label: str):
    from .nets import build_variant
    from .training import train

    augment_cfg = merged_config(args, "augment", seed=train_cfg.seed) if train_cfg.augment else None
    model = build_variant(model_cfg)
    weights = _train_weights(train_set, model_cfg.num_classes)
    logger.info(f"{label}: {model.display_name} with {model.parameter_count():,} parameters")

    with _progress() as progress:
        task = progress.add_task(label, total=train_cfg.epochs)

        def progress_callback(current, total, message):
            progress.update(task, completed=current, description=f"{label} {message}")

        result = train(
            model,
            train_set,
            train_cfg,
            weights=weights,
            test_set=test_set,
            out_dir=out,
            augment_cfg=augment_cfg,
            class_names=class_names,
            progress_callback=progress_callback,
        )
    return model, weights, result


def cmd_train(args):
    """Train one variant on a preprocessed dataset."""
    from .training import read_epoch_csv

    data_dir = Path(args.data)
    out = Path(args.out)
    train_set, test_set, class_names = _load_splits(data_dir)
    model_cfg = _model_config(args, len(class_names))
    train_cfg = _train_config(args)
    model_cfg.scales.validate(n_points=train_set.num_points, strict=False)

    config = {"data": str(data_dir), "model": config_to_dict(model_cfg), "train": config_to_dict(train_cfg)}
    run = start_run("train", config, train_cfg.seed, args.argv)
    model, weights, result = _run_training(
        args, model_cfg, train_cfg, train_set, test_set, class_names, out, "train"
    )

    artifacts = [result.csv_path, result.checkpoint_dir]
    config["class_weights"] = weights.weights.tolist()
    if result.best_report is not None:
        metrics_path = atomic_write(out / "metrics.json", json.dumps(result.best_report.to_dict(), indent=2) + "\n")
        artifacts.append(metrics_path)
        console.print(_metrics_table(f"Best epoch {result.best_epoch + 1}", result.best_report))
    else:
        console.print(f"[green]✓[/] trained {train_cfg.epochs} epochs (no test split)")

    if args.svg:
        from .plots import plot_training_curves

        svg = plot_training_curves(read_epoch_csv(result.csv_path), out / "curves.svg")
        if svg:
            artifacts.append(svg)
    _finish(run, out, artifacts)


def cmd_eval(args):
    """Score a saved checkpoint; writes metrics.json and confusion.csv."""
    from .data.cloud_io import DATASET_INFO_NAME, read_dataset_info, read_packed
    from .data.transforms import compute_class_weights
    from .nets import load_model
    from .training import evaluate, format_confusion_csv

    data_dir = Path(args.data)
    checkpoint = Path(args.checkpoint)
    out = Path(args.out) if args.out else checkpoint
    run = start_run("eval", {"data": str(data_dir), "checkpoint": str(checkpoint), "split": args.split},
                    None, args.argv)

    model, meta = load_model(checkpoint)
    dataset = read_packed(data_dir / f"{args.split}.tgpc")
    class_names = meta.get("class_names") or dataset.class_names or None
    weights = None
    if (data_dir / DATASET_INFO_NAME).exists():
        train_counts = read_dataset_info(data_dir).get("train_class_counts")
        if train_counts and min(train_counts) > 0:
            weights = compute_class_weights(train_counts)

    report = evaluate(model, dataset, args.batch_size, class_names, weights)
    artifacts = [
        atomic_write(out / "metrics.json", json.dumps(report.to_dict(), indent=2) + "\n"),
        atomic_write(out / "confusion.csv", format_confusion_csv(report)),
    ]
    console.print(_metrics_table(f"{model.display_name} on {args.split}", report))
    _finish(run, out, artifacts)


def sweep_candidates(args) -> list[ScaleTriple]:
    """Explicit ``--triples`` or one-factor grids around ``--base``; all validated up front."""
    if args.triples:
        triples = [ScaleTriple.parse(t) for t in args.triples.split(";") if t.strip()]
    else:
        base = ScaleTriple.parse(args.base)
        triples = []
        for axis, values in enumerate((args.k1, args.k2, args.k3)):
            for value in _int_list(values):
                ks = list(base.as_tuple())
                ks[axis] = value
                triples.append(ScaleTriple(*ks))
        if not triples:
            triples = [base]
    unique = list(dict.fromkeys(triples))
    for triple in unique:
        triple.validate(strict=True)
    return unique


def _int_list(text: Optional[str]) -> list[int]:
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def format_sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_sweep_k(args):
    """Train one model per scale triple and tabulate OA / BA / kappa."""
    data_dir = Path(args.data)
    out = Path(args.out)
    candidates = sweep_candidates(args)
    train_set, test_set, class_names = _load_splits(data_dir, require_test=True)
    for triple in candidates:
        triple.validate(n_points=train_set.num_points, strict=True)
    train_cfg = _train_config(args)

    config = {
        "data": str(data_dir),
        "triples": [str(t) for t in candidates],
        "train": config_to_dict(train_cfg),
    }
    run = start_run("sweep-k", config, train_cfg.seed, args.argv)
    logger.info(f"Sweeping {len(candidates)} scale triples")

    rows = []
    sweep_path = out / SWEEP_CSV_NAME
    for triple in candidates:
        model_cfg = _model_config(args, len(class_names), scales=str(triple))
        run_dir = out / "_".join(str(k) for k in triple.as_tuple())
        _, _, result = _run_training(
            args, model_cfg, train_cfg, train_set, test_set, class_names, run_dir, f"k={triple}"
        )
        report = result.best_report
        k1, k2, k3 = triple.as_tuple()
        rows.append({
            "k1": k1,
            "k2": k2,
            "k3": k3,
            "oa": repr(report.oa),
            "ba": repr(report.ba),
            "kappa": repr(report.kappa),
            "epoch_time": f"{np.mean([r.epoch_time_s for r in result.history]):.4f}",
        })
        atomic_write(sweep_path, format_sweep_csv(rows))

    table = Table(title="Scale sweep")
    for col in SWEEP_CSV_HEADER:
        table.add_column(col, justify="right")
    for row in rows:
        table.add_row(
            str(row["k1"]), str(row["k2"]), str(row["k3"]),
            f"{float(row['oa']):.2f}", f"{float(row['ba']):.2f}", f"{float(row['kappa']):.4f}",
            row["epoch_time"],
        )
    console.print(table)

    artifacts = [sweep_path]
    if args.svg:
        from .plots import plot_sweep

        svg = plot_sweep(rows, out / "sweep.svg")
        if svg:
            artifacts.append(svg)
    _finish(run, out, artifacts)


def cmd_summary(args):
    """Print the parameter table of a variant."""
    from .autodiff.checkpoint import checkpoint_size_mb
    from .nets import build_variant

    model_cfg = merged_config(
        args,
        "model",
        variant=args.variant,
        num_classes=args.classes,
        scales=args.scales,
        backbone_k=args.backbone_k,
    )
    run = start_run("summary", {"model": config_to_dict(model_cfg)}, model_cfg.seed, args.argv)
    model = build_variant(model_cfg)
    summary = model.summary()

    # group parameters by top-level block
    groups: dict[str, int] = {}
    for layer in summary.layers:
        block = layer.name.split(".")[0]
        groups[block] = groups.get(block, 0) + layer.size

    table = Table(title=f"{model.display_name} ({model_cfg.num_classes} classes)")
    table.add_column("block")
    table.add_column("parameters", justify="right")
    table.add_column("share", justify="right")
    for block, size in groups.items():
        table.add_row(block, f"{size:,}", f"{100.0 * size / summary.parameter_count:.1f}%")
    size_mb = checkpoint_size_mb(model)
    table.caption = f"total {summary.parameter_count:,} ({summary.millions:.2f}M), checkpoint {size_mb:.2f} MB"
    console.print(table)

    if args.verbose:
        detail = Table(title="Parameters")
        detail.add_column("name")
        detail.add_column("shape")
        detail.add_column("size", justify="right")
        for layer in summary.layers:
            detail.add_row(layer.name, "x".join(str(s) for s in layer.shape), f"{layer.size:,}")
        console.print(detail)

    if args.out:
        out = Path(args.out)
        payload = {
            "variant": summary.variant,
            "parameter_count": summary.parameter_count,
            "checkpoint_mb": size_mb,
            "blocks": groups,
            "layers": [{"name": layer.name, "shape": list(layer.shape), "size": layer.size}
                       for layer in summary.layers],
        }
        path = atomic_write(out / "summary.json", json.dumps(payload, indent=2) + "\n")
        _finish(run, out, [path])


def _add_model_flags(p: argparse.ArgumentParser, scales: bool = True) -> None:
    p.add_argument("--variant", choices=VARIANTS, help="Network variant")
    if scales:
        p.add_argument("--scales", help="k_local,k_branch,k_canopy (default 5,20,50)")
    p.add_argument("--backbone-k", type=int, help="Neighbors in the backbone EdgeConvs (default 20)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="Directory with train.tgpc / test.tgpc")
    p.add_argument("--out", required=True, help="Output directory")
    _add_model_flags(p, scales=False)
    p.add_argument("--epochs", type=int, help="Training epochs (default 300)")
    p.add_argument("--batch-size", type=int, help="Batch size (default 16)")
    p.add_argument("--lr", type=float, help="Initial learning rate (default 1e-3)")
    p.add_argument("--eta-min", type=float, help="Cosine schedule floor (default 1e-3)")
    p.add_argument("--weight-decay", type=float, help="L2 weight decay (default 1e-4)")
    p.add_argument("--dropout", type=float, help="Head dropout (default 0.5)")
    p.add_argument("--augment", action="store_true", help="Augment training batches")
    p.add_argument("--seed", type=int, help="Random seed")
    p.add_argument("--svg", action="store_true", help="Also render SVG charts (needs matplotlib)")


def build_parser() -> argparse.ArgumentParser:
    from . import __version__

    parser = argparse.ArgumentParser(
        description="Multi-scale dynamic graph networks for LiDAR tree classification",
        prog="treegraph",
    )
    parser.add_argument("--version", action="version", version=f"treegraph {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")
    parser.add_argument("--config", help="JSON config file with sampling/augment/model/train sections")

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    synth_parser = subparsers.add_parser("synth", help="Generate the synthetic 3-class dataset")
    synth_parser.add_argument("--out", required=True, help="Output directory")
    synth_parser.add_argument("--per-class", type=int, default=30, help="Clouds per class")
    synth_parser.add_argument("--seed", type=int, default=0, help="Random seed")
    synth_parser.add_argument("--points", type=int, default=1024, help="Points per cloud")
    synth_parser.add_argument("--test-fraction", type=float, default=1.0 / 3.0, help="Test share per class")

    manifest_parser = subparsers.add_parser("manifest", help="Build a manifest from class directories")
    manifest_parser.add_argument("--root", required=True, help="Directory with one subdirectory per class")
    manifest_parser.add_argument("--out", required=True, help="Manifest CSV to write")
    manifest_parser.add_argument("--test-fraction", type=float, default=0.2, help="Test share per class")
    manifest_parser.add_argument("--seed", type=int, default=0, help="Split seed")

    pre_parser = subparsers.add_parser("preprocess", help="Voxel + FPS + normalize into TGPC")
    pre_parser.add_argument("--manifest", required=True, help="Manifest CSV")
    pre_parser.add_argument("--out", required=True, help="Output directory")
    pre_parser.add_argument("--points", type=int, help="Points per sample (default 1024)")
    pre_parser.add_argument("--voxel-target", type=int, help="Voxel stage target count (default 30000)")
    pre_parser.add_argument(
        "--voxel-tol", "--voxel-tolerance", dest="voxel_tolerance", type=int,
        help="Voxel stage tolerance (default 500)",
    )
    pre_parser.add_argument("--seed", type=int, help="FPS seed")

    aug_parser = subparsers.add_parser("augment-preview", help="Write augmented copies of a few samples")
    aug_parser.add_argument("--data", required=True, help="Preprocessed dataset directory")
    aug_parser.add_argument("--out", required=True, help="Output directory")
    aug_parser.add_argument("--split", choices=["train", "test"], default="train")
    aug_parser.add_argument("--count", type=int, default=4, help="Samples to augment")
    aug_parser.add_argument(
        "--sigma-j", "--sigma", dest="sigma_j", type=float, help="Height jitter scale (default 0.01)"
    )
    aug_parser.add_argument("--scale-min", type=float, help="Minimum scale (default 0.8)")
    aug_parser.add_argument("--scale-max", type=float, help="Maximum scale (default 1.2)")
    aug_parser.add_argument(
        "--rotate", action=argparse.BooleanOptionalAction, help="Random z rotation (default on)"
    )
    aug_parser.add_argument(
        "--delete", action=argparse.BooleanOptionalAction, help="Random point deletion (default on)"
    )
    aug_parser.add_argument("--seed", type=int, help="Random seed")

    train_parser = subparsers.add_parser("train", help="Train a variant")
    _add_train_flags(train_parser)
    train_parser.add_argument("--scales", help="k_local,k_branch,k_canopy (default 5,20,50)")

    eval_parser = subparsers.add_parser("eval", help="Evaluate a checkpoint")
    eval_parser.add_argument("--data", required=True, help="Preprocessed dataset directory")
    eval_parser.add_argument("--checkpoint", required=True, help="Checkpoint directory (model.json + model.tgnw)")
    eval_parser.add_argument("--out", help="Output directory (default: the checkpoint directory)")
    eval_parser.add_argument("--split", choices=["train", "test"], default="test")
    eval_parser.add_argument("--batch-size", type=int, default=16)

    sweep_parser = subparsers.add_parser("sweep-k", help="Ablate the scale triple")
    _add_train_flags(sweep_parser)
    sweep_parser.add_argument("--triples", help='Explicit triples, e.g. "5,20,30;5,20,50"')
    sweep_parser.add_argument("--base", default="5,20,50", help="Triple the one-factor grids vary around")
    sweep_parser.add_argument("--k1", help="Comma-separated k_local values")
    sweep_parser.add_argument("--k2", help="Comma-separated k_branch values")
    sweep_parser.add_argument("--k3", help="Comma-separated k_canopy values")

    summary_parser = subparsers.add_parser("summary", help="Print a variant's parameter table")
    _add_model_flags(summary_parser)
    summary_parser.add_argument("--classes", type=int, help="Number of classes (default 7)")
    summary_parser.add_argument("--out", help="Also write summary.json and run_manifest.json here")

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point for the treegraph CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(sys.argv[1:] if argv is None else argv)
    setup_logging(args.verbose, args.quiet)

    if not args.command:
        parser.print_help()
        return 1

    try:
        args.config_data = load_config_file(args.config)
        if args.command == "synth":
            cmd_synth(args)
        elif args.command == "manifest":
            cmd_manifest(args)
        elif args.command == "preprocess":
            cmd_preprocess(args)
        elif args.command == "augment-preview":
            cmd_augment_preview(args)
        elif args.command == "train":
            cmd_train(args)
        elif args.command == "eval":
            cmd_eval(args)
        elif args.command == "sweep-k":
            cmd_sweep_k(args)
        elif args.command == "summary":
            cmd_summary(args)
    except TreeGraphError as e:
        logger.error(str(e))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
