"""Tests for xyz parsing and the TGPC packed format."""

import numpy as np
import pytest

from treegraph.data import (
    PACKED_MAGIC,
    PackedDataset,
    load_cloud,
    read_packed,
    write_dataset_info,
    write_packed,
    write_xyz,
)
from treegraph.data.cloud_io import pack_dataset, parse_xyz, unpack_dataset
from treegraph.errors import CloudParseError, ContractError, DegenerateCloudError


class TestXyzParsing:
    """ASCII xyz reader."""

    def test_four_points_in_order(self, tmp_path):
        path = tmp_path / "tetra.xyz"
        path.write_text("0 0 0\n1 0 0\n0 1 0\n0 0 1")
        cloud = load_cloud(path)
        np.testing.assert_array_equal(cloud.points, np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]))
        assert cloud.points.dtype == np.float32
        assert cloud.source_path == str(path)

    def test_arity_error_cites_line(self, tmp_path):
        path = tmp_path / "bad.xyz"
        path.write_text("0 0 0\n1 0 0\n1 2\n0 0 1\n")
        with pytest.raises(CloudParseError) as excinfo:
            load_cloud(path)
        assert excinfo.value.line == 3
        assert "bad.xyz:3" in str(excinfo.value)

    def test_extra_columns_rejected(self):
        with pytest.raises(CloudParseError):
            parse_xyz("0 0 0 255\n")

    def test_comments_blanks_and_commas(self):
        points = parse_xyz("# header\n\n1,2,3\n4 5 6  # trailing\n")
        np.testing.assert_array_equal(points, [[1, 2, 3], [4, 5, 6]])

    @pytest.mark.parametrize("value", ["nan", "inf", "abc"])
    def test_non_finite_or_non_numeric(self, value):
        with pytest.raises(CloudParseError):
            parse_xyz(f"0 0 0\n1 1 {value}\n")

    def test_three_points_are_degenerate(self, tmp_path):
        path = tmp_path / "tiny.xyz"
        path.write_text("0 0 0\n1 0 0\n0 1 0\n")
        with pytest.raises(DegenerateCloudError):
            load_cloud(path)

    def test_unknown_suffix(self, tmp_path):
        path = tmp_path / "cloud.las"
        path.write_bytes(b"")
        with pytest.raises(CloudParseError, match="suffix"):
            load_cloud(path)

    def test_explicit_format_overrides_suffix(self, tmp_path):
        path = tmp_path / "cloud.dat"
        path.write_text("0 0 0\n1 0 0\n0 1 0\n0 0 1\n")
        assert load_cloud(path, format="xyz_ascii").num_points == 4


class TestPackedFormat:
    """TGPC reader and writer."""

    @pytest.fixture
    def dataset(self):
        rng = np.random.default_rng(0)
        return PackedDataset(
            points=rng.normal(size=(5, 16, 3)).astype(np.float32),
            labels=np.array([0, 1, 2, 1, 0], dtype=np.uint16),
        )

    def test_layout(self, dataset):
        blob = pack_dataset(dataset)
        assert blob[:4] == PACKED_MAGIC
        assert len(blob) == 16 + 5 * (16 * 3 * 4 + 2)

    def test_round_trip(self, tmp_path, dataset):
        path = write_packed(tmp_path / "train.tgpc", dataset)
        restored = read_packed(path)
        np.testing.assert_array_equal(restored.points, dataset.points)
        np.testing.assert_array_equal(restored.labels, dataset.labels)
        assert len(restored) == 5
        assert restored.num_points == 16

    def test_class_names_from_side_file(self, tmp_path, dataset):
        write_packed(tmp_path / "train.tgpc", dataset)
        write_dataset_info(tmp_path, {"class_names": ["a", "b", "c"]})
        assert read_packed(tmp_path / "train.tgpc").class_names == ["a", "b", "c"]

    def test_empty_dataset(self):
        empty = PackedDataset(np.zeros((0, 8, 3), dtype=np.float32), np.zeros(0, dtype=np.uint16))
        restored = unpack_dataset(pack_dataset(empty))
        assert len(restored) == 0
        assert restored.num_points == 8

    def test_bad_magic(self, dataset):
        with pytest.raises(CloudParseError, match="magic"):
            unpack_dataset(b"NOPE" + pack_dataset(dataset)[4:])

    def test_truncated(self, dataset):
        with pytest.raises(CloudParseError):
            unpack_dataset(pack_dataset(dataset)[:-1])

    def test_label_shape(self):
        with pytest.raises(ContractError):
            pack_dataset(PackedDataset(np.zeros((2, 4, 3)), np.zeros(3)))

    def test_load_cloud_reads_first_sample(self, tmp_path, dataset):
        path = write_packed(tmp_path / "set.tgpc", dataset)
        cloud = load_cloud(path)
        np.testing.assert_array_equal(cloud.points, dataset.points[0])
        assert cloud.label == 0


def test_xyz_packed_xyz_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(42)
    original = (rng.normal(size=(64, 3)) * rng.uniform(0.01, 1000.0, size=(64, 1))).astype(np.float32)
    first = write_xyz(tmp_path / "a.xyz", original)

    cloud = load_cloud(first)
    packed = write_packed(tmp_path / "a.tgpc", PackedDataset(cloud.points[None], np.zeros(1, dtype=np.uint16)))
    second = write_xyz(tmp_path / "b.xyz", read_packed(packed).points[0])

    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_array_equal(load_cloud(second).points, original)
