"""Tests for the synthetic tree generator and the height-histogram baseline."""

import numpy as np
import pytest

from treegraph.baseline import NearestCentroidBaseline, height_histogram_features
from treegraph.data import load_cloud, normalize_points, read_manifest
from treegraph.data.synth import SYNTH_CLASSES, generate_dataset, generate_tree, write_synthetic_dataset
from treegraph.errors import ConfigError, ContractError


class TestSyntheticTrees:
    """Generator shape and determinism."""

    def test_counts(self):
        samples = generate_dataset(20, seed=0)
        assert len(samples) == 60
        assert sorted({s.label for s in samples}) == [0, 1, 2]
        assert all(s.points.shape == (1024, 3) for s in samples)
        assert all(s.points.dtype == np.float32 for s in samples)

    def test_seeded(self):
        a = generate_dataset(4, seed=5, n_points=128)
        b = generate_dataset(4, seed=5, n_points=128)
        c = generate_dataset(4, seed=6, n_points=128)
        assert all(np.array_equal(x.points, y.points) for x, y in zip(a, b))
        assert not np.array_equal(a[0].points, c[0].points)

    def test_normalized_centroids_at_origin(self):
        for sample in generate_dataset(4, seed=1, n_points=256):
            centroid = normalize_points(sample.points).astype(np.float64).mean(axis=0)
            np.testing.assert_allclose(centroid, 0.0, atol=1e-5)

    def test_minimum_per_class(self):
        with pytest.raises(ConfigError):
            generate_dataset(3)

    def test_unknown_class(self):
        with pytest.raises(ConfigError):
            generate_tree("palm", np.random.default_rng(0))

    def test_written_dataset(self, tmp_path):
        manifest = write_synthetic_dataset(tmp_path, n_per_class=30, seed=0, n_points=64)
        assert len(manifest.split("train")) == 60
        assert len(manifest.split("test")) == 30
        assert manifest.class_names == list(SYNTH_CLASSES)
        assert read_manifest(tmp_path / "manifest.csv").entries == manifest.entries
        cloud = load_cloud(tmp_path / manifest.entries[0].path)
        assert cloud.num_points == 64


class TestBaseline:
    """Nearest-centroid on normalized-height density."""

    def test_histogram_is_a_density(self):
        pts = np.random.default_rng(0).normal(size=(500, 3))
        feats = height_histogram_features(pts, bins=8)
        assert feats.shape == (8,)
        assert feats.sum() == pytest.approx(1.0)

    def test_flat_cloud_goes_to_first_bin(self):
        pts = np.zeros((10, 3))
        pts[:, 0] = np.arange(10)
        feats = height_histogram_features(pts, bins=4)
        np.testing.assert_array_equal(feats, [1.0, 0.0, 0.0, 0.0])

    def test_separates_bottom_and_top_heavy(self):
        rng = np.random.default_rng(0)

        def cloud(top_heavy):
            z = rng.beta(5, 1, size=200) if top_heavy else rng.beta(1, 5, size=200)
            return np.column_stack([rng.normal(size=200), rng.normal(size=200), z])

        samples = [cloud(i % 2 == 1) for i in range(20)]
        labels = [i % 2 for i in range(20)]
        baseline = NearestCentroidBaseline().fit(samples, labels)
        assert baseline.score(samples, labels) == 100.0

    def test_predict_before_fit(self):
        with pytest.raises(ContractError):
            NearestCentroidBaseline().predict([np.zeros((4, 3))])

    def test_label_count_mismatch(self):
        with pytest.raises(ContractError):
            NearestCentroidBaseline().fit([np.zeros((4, 3))], [0, 1])


@pytest.mark.slow
def test_baseline_is_better_than_chance_but_imperfect():
    train = generate_dataset(20, seed=0)
    test = generate_dataset(10, seed=1)
    baseline = NearestCentroidBaseline().fit([s.points for s in train], [s.label for s in train])
    score = baseline.score([s.points for s in test], [s.label for s in test])
    assert 100.0 / 3.0 < score < 100.0
