"""Tests for the loss, the optimizer, the schedule and the training loop."""

import math

import numpy as np
import pytest

from treegraph.autodiff import Parameter, Tensor
from treegraph.baseline import NearestCentroidBaseline
from treegraph.data import PackedDataset, compute_class_weights, normalize_points
from treegraph.data.synth import generate_dataset
from treegraph.errors import ConfigError, TrainingError
from treegraph.models import ClassWeights, ModelConfig, ScaleTriple, TrainConfig
from treegraph.nets import build_variant, load_model
from treegraph.training import (
    EPOCH_CSV_HEADER,
    EPOCH_CSV_NAME,
    Adam,
    AdamState,
    adam_step,
    cosine_lr,
    evaluate,
    read_epoch_csv,
    train,
    weighted_cross_entropy,
)
from treegraph.training.trainer import BatchLoader


def _small_model(num_classes: int = 2, **overrides):
    values = dict(num_classes=num_classes, scales=ScaleTriple(2, 4, 8), backbone_k=4, dropout=0.0, seed=0)
    values.update(overrides)
    return build_variant(ModelConfig(**values))


def _toy_dataset(n_per_class: int = 4, n_points: int = 32, seed: int = 0) -> PackedDataset:
    """Class 0 is stretched along z, class 1 along x."""
    rng = np.random.default_rng(seed)
    clouds, labels = [], []
    for label, stretch in enumerate(([0.2, 0.2, 1.0], [1.0, 0.2, 0.2])):
        for _ in range(n_per_class):
            clouds.append(normalize_points(rng.normal(size=(n_points, 3)) * stretch))
            labels.append(label)
    return PackedDataset(
        points=np.stack(clouds).astype(np.float32),
        labels=np.array(labels, dtype=np.uint16),
        class_names=["upright", "lying"],
    )


def _single_sample() -> PackedDataset:
    dataset = _toy_dataset(n_per_class=1)
    return PackedDataset(points=dataset.points[:1], labels=dataset.labels[:1], class_names=dataset.class_names)


class TestWeightedLoss:
    """Weighted cross-entropy values."""

    def test_confident_prediction(self):
        logits = Tensor(10.0 * np.eye(7)[[3]])
        assert weighted_cross_entropy(logits, np.array([3])).item() < 1e-3

    def test_uniform_logits(self):
        loss = weighted_cross_entropy(Tensor(np.zeros((1, 2))), np.array([0]))
        assert loss.item() == pytest.approx(math.log(2.0), rel=1e-6)

    def test_doubling_weights_doubles_loss(self):
        logits = Tensor(np.random.default_rng(0).normal(size=(5, 3)))
        labels = np.array([0, 1, 2, 1, 0])
        base = weighted_cross_entropy(logits, labels, np.ones(3)).item()
        doubled = weighted_cross_entropy(logits, labels, 2.0 * np.ones(3)).item()
        assert doubled == pytest.approx(2.0 * base, rel=1e-6)

    def test_shift_invariance(self):
        raw = np.random.default_rng(1).normal(size=(4, 3))
        labels = np.array([2, 0, 1, 1])
        a = weighted_cross_entropy(Tensor(raw, dtype=np.float64), labels).item()
        b = weighted_cross_entropy(Tensor(raw + 1000.0, dtype=np.float64), labels).item()
        assert a == pytest.approx(b, rel=1e-9)

    def test_accepts_class_weights(self):
        logits = Tensor(np.zeros((2, 2)))
        weights = compute_class_weights([3, 1])
        expected = weighted_cross_entropy(logits, np.array([0, 1]), weights.weights).item()
        assert weighted_cross_entropy(logits, np.array([0, 1]), weights).item() == expected


class TestAdam:
    """Optimizer steps."""

    def test_first_step_moves_by_lr(self):
        p = np.array([1.0, -2.0, 3.0])
        adam_step([p], [np.array([0.5, -4.0, 1e-3])], AdamState(), lr=0.01)
        np.testing.assert_allclose(p, [0.99, -1.99, 2.99], atol=1e-6)

    def test_zero_gradient_leaves_parameters(self):
        p = np.array([1.0, 2.0])
        state = AdamState()
        for _ in range(3):
            adam_step([p], [np.zeros(2)], state, lr=0.1)
        np.testing.assert_array_equal(p, [1.0, 2.0])

    def test_none_gradient_is_skipped(self):
        a, b = np.array([1.0]), np.array([1.0])
        adam_step([a, b], [np.array([1.0]), None], AdamState(), lr=0.1)
        assert b[0] == 1.0
        assert a[0] < 1.0

    def test_minimizes_a_parabola(self):
        x = Parameter(np.array([5.0]), dtype=np.float64)
        opt = Adam([x], lr=0.05)
        for _ in range(200):
            x.grad = 2.0 * x.data
            opt.step()
        assert abs(x.data[0]) < 0.1

    def test_weight_decay_pulls_toward_zero(self):
        p = np.array([2.0])
        adam_step([p], [np.zeros(1)], AdamState(), lr=0.1, weight_decay=0.5)
        assert p[0] < 2.0


class TestCosineSchedule:
    """Learning-rate schedule."""

    def test_endpoints(self):
        cfg = TrainConfig(lr=0.1, eta_min=0.001, epochs=10)
        assert cosine_lr(0, cfg) == pytest.approx(0.1)
        assert cosine_lr(10, cfg) == pytest.approx(0.001)
        assert cosine_lr(5, cfg) == pytest.approx(0.0505)

    def test_flat_when_bounds_meet(self):
        cfg = TrainConfig()
        assert {cosine_lr(e, cfg) for e in range(0, 300, 7)} == {cfg.lr}

    def test_monotone(self):
        cfg = TrainConfig(lr=0.01, eta_min=0.0, epochs=50)
        rates = [cosine_lr(e, cfg) for e in range(51)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))


class TestBatchLoader:
    """Epoch iteration."""

    def test_every_sample_once(self):
        dataset = _toy_dataset(n_per_class=5)
        loader = BatchLoader(dataset, batch_size=4, seed=0)
        batches = list(loader.epoch())
        assert [len(labels) for _, labels in batches] == [4, 4, 2]
        assert batches[0][0].shape == (4, 3, 32)
        assert sorted(np.concatenate([labels for _, labels in batches]).tolist()) == [0] * 5 + [1] * 5

    def test_order_changes_between_epochs(self):
        loader = BatchLoader(_toy_dataset(n_per_class=8), batch_size=16, seed=0)
        first = next(loader.epoch())[0]
        second = next(loader.epoch())[0]
        assert not np.array_equal(first, second)

    def test_lone_trailing_sample_joins_previous_batch(self):
        loader = BatchLoader(_toy_dataset(n_per_class=5), batch_size=3, seed=0)
        assert [len(labels) for _, labels in loader.epoch()] == [3, 3, 4]

    def test_single_sample_set_is_one_batch(self):
        loader = BatchLoader(_single_sample(), batch_size=16, seed=0)
        assert [len(labels) for _, labels in loader.epoch()] == [1]


class TestTrain:
    """The training loop end to end on a toy problem."""

    def test_memorizes_a_single_sample(self):
        """One sample, default hyperparameters and dropout, 50 epochs: loss below 1e-2."""
        model = _small_model(dropout=ModelConfig().dropout)
        result = train(model, _single_sample(), TrainConfig(epochs=50))
        assert result.history[-1].train_loss < 1e-2
        assert result.history[-1].train_oa == 100.0

    def test_memorizes_a_tiny_set(self):
        dataset = _toy_dataset()
        model = _small_model()
        cfg = TrainConfig(batch_size=4, lr=0.01, eta_min=0.0, weight_decay=0.0, epochs=30)
        result = train(model, dataset, cfg)
        assert result.history[-1].train_loss < 0.5 * result.history[0].train_loss
        assert result.history[-1].train_oa == 100.0
        assert result.best_epoch == cfg.epochs - 1

    def test_csv_and_best_checkpoint(self, tmp_path):
        dataset = _toy_dataset()
        cfg = TrainConfig(batch_size=4, lr=0.01, eta_min=0.0, epochs=3)
        result = train(_small_model(), dataset, cfg, test_set=dataset, out_dir=tmp_path)

        rows = read_epoch_csv(tmp_path / EPOCH_CSV_NAME)
        assert len(rows) == 3
        assert tuple(rows[0]) == EPOCH_CSV_HEADER
        best_oa = max(record.test.oa for record in result.history)
        assert result.best_report.oa == best_oa
        first_best = min(r.epoch for r in result.history if r.test.oa == best_oa)
        assert result.best_epoch == first_best
        assert float(rows[result.best_epoch]["test_oa"]) == best_oa

        model, meta = load_model(result.checkpoint_dir)
        assert meta["class_names"] == ["upright", "lying"]
        report = evaluate(model, dataset, class_names=meta["class_names"])
        assert report.oa == result.best_report.oa
        np.testing.assert_array_equal(report.confusion, result.best_report.confusion)

    def test_deterministic_with_augmentation(self):
        cfg = TrainConfig(batch_size=4, lr=0.01, epochs=2, augment=True, seed=3)
        a = train(_small_model(), _toy_dataset(), cfg)
        b = train(_small_model(), _toy_dataset(), cfg)
        assert [r.train_loss for r in a.history] == [r.train_loss for r in b.history]

    def test_non_finite_loss(self):
        weights = ClassWeights(weights=np.array([np.inf, np.inf]), counts=np.array([1, 1]))
        cfg = TrainConfig(batch_size=4, epochs=1)
        with pytest.raises(TrainingError) as excinfo:
            train(_small_model(), _toy_dataset(), cfg, weights=weights)
        assert excinfo.value.epoch == 0
        assert excinfo.value.batch_index == 0

    def test_empty_training_set(self):
        empty = PackedDataset(np.zeros((0, 32, 3), dtype=np.float32), np.zeros(0, dtype=np.uint16))
        with pytest.raises(TrainingError):
            train(_small_model(), empty, TrainConfig(epochs=1))

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            train(_small_model(), _toy_dataset(), TrainConfig(epochs=0))

    def test_constant_rate_warning(self, caplog):
        train(_small_model(), _toy_dataset(n_per_class=2), TrainConfig(batch_size=4, epochs=1))
        assert "learning rate is constant" in caplog.text


def _synthetic_split(
    train_per_class: int, test_per_class: int, n_points: int
) -> tuple[PackedDataset, PackedDataset]:
    """Normalized synthetic trees; the test split comes from a different seed."""

    def pack(samples):
        return PackedDataset(
            points=np.stack([normalize_points(s.points) for s in samples]).astype(np.float32),
            labels=np.array([s.label for s in samples], dtype=np.uint16),
            class_names=["broadleaf", "conifer", "shrub"],
        )

    return (
        pack(generate_dataset(train_per_class, seed=0, n_points=n_points)),
        pack(generate_dataset(test_per_class, seed=1, n_points=n_points)),
    )


def _train_weights(dataset: PackedDataset) -> ClassWeights:
    return compute_class_weights(np.bincount(dataset.labels, minlength=3))


@pytest.mark.slow
def test_synthetic_end_to_end(tmp_path):
    train_set, test_set = _synthetic_split(10, 4, n_points=128)
    model = _small_model(num_classes=3, scales=ScaleTriple(5, 10, 20), backbone_k=10)
    cfg = TrainConfig(batch_size=8, lr=0.005, eta_min=0.0, epochs=8)
    result = train(
        model, train_set, cfg, weights=_train_weights(train_set), test_set=test_set, out_dir=tmp_path
    )

    assert result.history[-1].train_loss < result.history[0].train_loss
    assert 0.0 <= result.best_report.oa <= 100.0
    assert -1.0 <= result.best_report.kappa <= 1.0
    assert (tmp_path / "best" / "model.tgnw").exists()


@pytest.mark.slow
def test_loss_falls_over_ten_epochs_for_most_seeds():
    """60 training trees; the tenth epoch's loss is below the first for at least 8 of 10 seeds."""
    train_set, _ = _synthetic_split(20, 4, n_points=128)
    weights = _train_weights(train_set)
    falling = 0
    for seed in range(10):
        model = _small_model(num_classes=3, scales=ScaleTriple(5, 10, 20), backbone_k=10, seed=seed)
        result = train(model, train_set, TrainConfig(epochs=10, eta_min=0.0, seed=seed), weights=weights)
        falling += result.history[9].train_loss < result.history[0].train_loss
    assert falling >= 8


@pytest.mark.slow
def test_full_model_learns_the_synthetic_set():
    """60 train / 30 test trees of 1024 points, default MS-DGCNN++, 60 epochs."""
    train_set, test_set = _synthetic_split(20, 10, n_points=1024)
    model = build_variant(ModelConfig(num_classes=3))
    cfg = TrainConfig(epochs=60, eta_min=1e-5)
    result = train(model, train_set, cfg, weights=_train_weights(train_set), test_set=test_set)

    assert max(r.train_oa for r in result.history) >= 95.0
    assert result.best_report.oa >= 80.0
    baseline = NearestCentroidBaseline().fit(list(train_set.points), train_set.labels)
    assert result.best_report.oa > baseline.score(list(test_set.points), test_set.labels)


@pytest.mark.slow
def test_multiscale_fusion_matches_or_beats_single_scale():
    """Same data, epochs and seeds: msdgcnn_pp test OA >= dgcnn test OA for at least 4 of 5 seeds."""
    train_set, test_set = _synthetic_split(20, 10, n_points=256)
    weights = _train_weights(train_set)
    wins = 0
    for seed in range(5):
        cfg = TrainConfig(epochs=30, eta_min=1e-5, seed=seed)
        oa = {}
        for variant in ("msdgcnn_pp", "dgcnn"):
            model = build_variant(ModelConfig(variant=variant, num_classes=3, seed=seed))
            oa[variant] = train(model, train_set, cfg, weights=weights, test_set=test_set).best_report.oa
        wins += oa["msdgcnn_pp"] >= oa["dgcnn"]
    assert wins >= 4
