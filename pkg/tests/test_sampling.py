"""Tests for pairwise distances, farthest point sampling and voxel reduction."""

import numpy as np
import pytest

from treegraph.errors import ContractError, DegenerateCloudError
from treegraph.models import SamplingConfig
from treegraph.sampling import (
    farthest_point_sample,
    pairwise_neg_sq_dist,
    preprocess_cloud,
    voxel_centroids,
    voxel_downsample_recursive,
)


def _greedy_fps(points: np.ndarray, m: int, start: int) -> list[int]:
    """Quadratic reference: recompute every min distance from scratch at each step."""
    d = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    picked = [start]
    while len(picked) < m:
        best, best_dist = -1, -np.inf
        for i in range(points.shape[0]):
            if i in picked:
                continue
            dist = d[i, picked].min()
            if dist > best_dist:
                best, best_dist = i, dist
        picked.append(best)
    return picked


def _grid(side: int) -> np.ndarray:
    axis = np.arange(side, dtype=np.float64)
    return np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)


class TestPairwise:
    """Negative squared distance matrix."""

    def test_two_points(self):
        d = pairwise_neg_sq_dist(np.array([[0.0, 0, 0], [3, 4, 0]]))
        np.testing.assert_array_equal(d, [[0.0, -25.0], [-25.0, 0.0]])

    def test_single_point(self):
        np.testing.assert_array_equal(pairwise_neg_sq_dist(np.array([[1.0, 2.0, 3.0]])), [[0.0]])

    @pytest.mark.parametrize("seed", range(200))
    def test_matches_double_loop_in_64_bit(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(int(rng.integers(2, 129)), 3))
        expected = np.array([[-sum((a - b) ** 2 for a, b in zip(p, q)) for q in pts] for p in pts])
        d = pairwise_neg_sq_dist(pts)
        np.testing.assert_array_equal(d, expected)
        np.testing.assert_array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)

    def test_32_bit_close_to_64_bit(self):
        pts = np.random.default_rng(1).normal(size=(50, 3))
        d32 = pairwise_neg_sq_dist(pts.astype(np.float32))
        assert d32.dtype == np.float32
        np.testing.assert_allclose(d32, pairwise_neg_sq_dist(pts), rtol=1e-5, atol=1e-5)

    def test_rejects_non_finite(self):
        with pytest.raises(ContractError):
            pairwise_neg_sq_dist(np.array([[0.0, 0, 0], [np.nan, 0, 0]]))


class TestFarthestPointSampling:
    """Greedy max-min selection."""

    def test_collinear_example(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [10, 0, 0]])
        assert farthest_point_sample(pts, 3, start=0).tolist() == [0, 3, 2]

    def test_full_sample_is_a_permutation(self):
        pts = np.random.default_rng(0).normal(size=(30, 3))
        idx = farthest_point_sample(pts, 30, seed=4)
        assert sorted(idx.tolist()) == list(range(30))

    def test_oversampling_rejected(self):
        with pytest.raises(ContractError):
            farthest_point_sample(np.zeros((4, 3)), 5)

    def test_zero_samples(self):
        assert farthest_point_sample(np.zeros((4, 3)), 0).size == 0

    def test_bad_start(self):
        with pytest.raises(ContractError):
            farthest_point_sample(np.zeros((4, 3)), 2, start=7)

    def test_seeded_start(self):
        pts = np.random.default_rng(0).normal(size=(100, 3))
        a = farthest_point_sample(pts, 10, seed=3)
        b = farthest_point_sample(pts, 10, seed=3)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("seed", range(200))
    def test_matches_greedy_reference(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 129))
        pts = rng.normal(size=(n, 3))
        m = int(rng.integers(1, n + 1))
        start = int(rng.integers(n))
        assert farthest_point_sample(pts, m, start=start).tolist() == _greedy_fps(pts, m, start)

    def test_greedy_prefix(self):
        """Asking for one more point only appends to the earlier selection."""
        pts = np.random.default_rng(8).normal(size=(100, 3))
        full = farthest_point_sample(pts, 40, start=7)
        for m in range(1, 40):
            np.testing.assert_array_equal(farthest_point_sample(pts, m, start=7), full[:m])

    def test_unique_indices(self):
        pts = np.random.default_rng(2).normal(size=(64, 3))
        idx = farthest_point_sample(pts, 32, seed=0)
        assert len(set(idx.tolist())) == 32


class TestVoxelReduction:
    """Voxel-size search."""

    def test_centroids_stay_in_their_voxels(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-2.0, 3.0, size=(5000, 3))
        origin = pts.min(axis=0)
        size = 0.37
        keys = np.unique(np.floor((pts - origin) / size).astype(np.int64), axis=0)
        centroids = voxel_centroids(pts, size, origin)
        assert centroids.shape == (len(keys), 3)
        lower = origin + keys * size
        assert np.all(centroids >= lower - 1e-12)
        assert np.all(centroids <= lower + size + 1e-12)

    def test_small_cloud_passes_through(self):
        pts = np.random.default_rng(0).normal(size=(100, 3))
        result = voxel_downsample_recursive(pts, SamplingConfig(voxel_target=200, voxel_tolerance=10))
        assert result.points is pts
        assert result.voxel_size is None
        assert result.iterations == 0

    def test_grid_reaches_target(self):
        result = voxel_downsample_recursive(_grid(50), SamplingConfig())
        assert result.converged
        assert 29500 <= result.points.shape[0] <= 30500

    def test_scale_equivariant(self):
        cfg = SamplingConfig(voxel_target=2200, voxel_tolerance=100)
        pts = np.random.default_rng(3).uniform(size=(20000, 3))
        once = voxel_downsample_recursive(pts, cfg)
        doubled = voxel_downsample_recursive(2.0 * pts, cfg)
        assert once.points.shape[0] == doubled.points.shape[0]
        np.testing.assert_allclose(doubled.points, 2.0 * once.points, atol=1e-9)

    def test_zero_extent(self):
        with pytest.raises(DegenerateCloudError):
            voxel_downsample_recursive(np.ones((300, 3)), SamplingConfig(voxel_target=100, voxel_tolerance=5))


class TestPreprocess:
    """The full per-cloud pipeline."""

    @pytest.fixture
    def cloud(self):
        return np.random.default_rng(0).normal(size=(3000, 3)) * [1.0, 1.0, 5.0]

    def test_output_shape_and_norm(self, cloud):
        cfg = SamplingConfig(target_points=256, voxel_target=1000, voxel_tolerance=100)
        out = preprocess_cloud(cloud, cfg)
        assert out.shape == (256, 3)
        assert out.dtype == np.float32
        assert np.linalg.norm(out, axis=1).max() == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(out.astype(np.float64).mean(axis=0), 0.0, atol=1e-6)

    def test_deterministic(self, cloud):
        cfg = SamplingConfig(target_points=128, voxel_target=1000, voxel_tolerance=100, seed=5)
        np.testing.assert_array_equal(preprocess_cloud(cloud, cfg), preprocess_cloud(cloud, cfg))

    def test_too_few_points(self, cloud):
        with pytest.raises(ContractError):
            preprocess_cloud(cloud[:100], SamplingConfig(target_points=256))

    def test_degenerate(self):
        with pytest.raises(DegenerateCloudError):
            preprocess_cloud(np.zeros((3, 3)), SamplingConfig(target_points=4))
