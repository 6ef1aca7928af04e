import logging
import struct

import numpy as np
import pytest
from PIL import Image as PILImage

from pcaharmony import umx
from pcaharmony.images import IngestError
from pcaharmony.ingest import (
    DatasetLayout,
    DatasetRecord,
    flatten,
    load_dataset,
    load_split,
    save_split,
    split_dataset,
    split_ids,
    unflatten,
)


def write_gray(path, arr):
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)


def make_dataset(root, n=4, size=(6, 5), with_masks=True, empty_mask_ids=()):
    """Lay out images/xxx.png and masks/xxx.png pairs for load_dataset tests."""
    rng = np.random.default_rng(99)
    for i in range(n):
        name = f"case_{i:02d}"
        img = (rng.random(size) * 255).astype(np.uint8)
        write_gray(root / "images" / f"{name}.png", img)
        if with_masks:
            if name in empty_mask_ids:
                mask = np.zeros(size, dtype=np.uint8)
            else:
                mask = np.zeros(size, dtype=np.uint8)
                mask[1:3, 1:4] = 255
            write_gray(root / "masks" / f"{name}.png", mask)


class TestUmxFormat:
    def test_round_trip_f64(self, tmp_path):
        rng = np.random.default_rng(0)
        m = umx.DataMatrix(rng.random((3, 7)), ["a", "b", "c"])
        path = tmp_path / "m.umx"
        umx.save_matrix(path, m)
        back = umx.load_matrix(path)
        np.testing.assert_array_equal(back.data, m.data)
        assert back.row_ids == ["a", "b", "c"]

    def test_round_trip_f32(self, tmp_path):
        rng = np.random.default_rng(1)
        m = umx.DataMatrix(rng.random((2, 4)), ["x", "y"])
        path = tmp_path / "m.umx"
        umx.save_matrix(path, m, scalar_width=4)
        back = umx.load_matrix(path)
        np.testing.assert_allclose(back.data, m.data, atol=1e-7)

    def test_header_layout(self, tmp_path):
        m = umx.DataMatrix(np.zeros((2, 3)), ["r0", "r1"])
        path = tmp_path / "m.umx"
        umx.save_matrix(path, m)
        raw = path.read_bytes()
        magic, version, rows, cols, width = struct.unpack("<4sIQQB", raw[:25])
        assert magic == b"UMX1"
        assert version == 1
        assert (rows, cols, width) == (2, 3, 8)
        assert len(raw) == 25 + 2 * 3 * 8

    def test_sidecar_ids_one_per_line(self, tmp_path):
        m = umx.DataMatrix(np.zeros((2, 2)), ["first", "second"])
        path = tmp_path / "m.umx"
        umx.save_matrix(path, m)
        assert (tmp_path / "m.umx.ids").read_text().splitlines() == ["first", "second"]

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.umx"
        umx.save_matrix(path, umx.DataMatrix(np.zeros((1, 1)), ["a"]))
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="m.umx"):
            umx.load_matrix(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "m.umx"
        umx.save_matrix(path, umx.DataMatrix(np.ones((2, 2)), ["a", "b"]))
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(ValueError, match="m.umx"):
            umx.load_matrix(path)

    def test_id_count_mismatch_rejected(self, tmp_path):
        path = tmp_path / "m.umx"
        umx.save_matrix(path, umx.DataMatrix(np.ones((2, 2)), ["a", "b"]))
        (tmp_path / "m.umx.ids").write_text("a\n")
        with pytest.raises(ValueError, match="row ids"):
            umx.load_matrix(path)

    def test_bad_scalar_width_rejected(self, tmp_path):
        path = tmp_path / "m.umx"
        umx.save_matrix(path, umx.DataMatrix(np.zeros((1, 1)), ["a"]))
        raw = bytearray(path.read_bytes())
        raw[24] = 3
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="scalar width"):
            umx.load_matrix(path)


class TestLoadDataset:
    def test_records_sorted_and_paired(self, tmp_path):
        make_dataset(tmp_path, n=3)
        records = load_dataset(tmp_path, DatasetLayout())
        assert [r.id for r in records] == ["case_00", "case_01", "case_02"]
        for r in records:
            assert r.image.shape == (6, 5)
            assert r.mask.shape == (6, 5)
            assert set(np.unique(r.mask)) <= {0, 1}

    def test_two_loads_identical(self, tmp_path):
        make_dataset(tmp_path, n=4)
        a = load_dataset(tmp_path, DatasetLayout())
        b = load_dataset(tmp_path, DatasetLayout())
        assert [r.id for r in a] == [r.id for r in b]
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.image, rb.image)

    def test_missing_mask_is_an_error(self, tmp_path):
        make_dataset(tmp_path, n=2)
        (tmp_path / "masks" / "case_01.png").unlink()
        with pytest.raises(IngestError, match="case_01"):
            load_dataset(tmp_path, DatasetLayout())

    def test_no_mask_template_gives_maskless_records(self, tmp_path):
        make_dataset(tmp_path, n=2, with_masks=False)
        records = load_dataset(tmp_path, DatasetLayout(mask_template=None))
        assert all(r.mask is None for r in records)

    def test_dimension_mismatch_rejected(self, tmp_path):
        make_dataset(tmp_path, n=2)
        write_gray(tmp_path / "masks" / "case_00.png", np.zeros((3, 3), dtype=np.uint8))
        with pytest.raises(IngestError, match="case_00"):
            load_dataset(tmp_path, DatasetLayout())

    def test_empty_directory_warns_and_returns_empty(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            records = load_dataset(tmp_path, DatasetLayout())
        assert records == []
        assert any("no images" in m for m in caplog.messages)

    def test_resize_applies_to_both(self, tmp_path):
        make_dataset(tmp_path, n=2)
        records = load_dataset(tmp_path, DatasetLayout(), resize=(8, 8))
        for r in records:
            assert r.image.shape == (8, 8)
            assert r.mask.shape == (8, 8)
            assert set(np.unique(r.mask)) <= {0, 1}

    def test_require_tumor_drops_empty_masks(self, tmp_path):
        make_dataset(tmp_path, n=3, empty_mask_ids=("case_01",))
        records = load_dataset(tmp_path, DatasetLayout(), require_tumor=True)
        assert [r.id for r in records] == ["case_00", "case_02"]


class TestSplit:
    def test_counts_follow_floor_rule(self):
        train, val, test = split_ids([f"r{i}" for i in range(10)])
        assert (len(train), len(val), len(test)) == (7, 1, 2)

    def test_large_n_counts(self):
        ids = [f"img_{i:05d}" for i in range(3983)]
        train, val, test = split_ids(ids)
        assert (len(train), len(val), len(test)) == (2788, 398, 797)

    def test_partition(self):
        ids = [f"r{i}" for i in range(53)]
        train, val, test = split_ids(ids, seed=5)
        combined = sorted(train + val + test)
        assert combined == sorted(ids)
        assert not (set(train) & set(val))
        assert not (set(train) & set(test))
        assert not (set(val) & set(test))

    def test_same_seed_same_split(self):
        ids = [f"r{i}" for i in range(40)]
        assert split_ids(ids, seed=42) == split_ids(ids, seed=42)

    def test_different_seed_different_split(self):
        ids = [f"r{i}" for i in range(40)]
        assert split_ids(ids, seed=1) != split_ids(ids, seed=2)

    def test_input_order_does_not_matter(self):
        ids = [f"r{i}" for i in range(20)]
        shuffled = list(reversed(ids))
        assert split_ids(ids, seed=3) == split_ids(shuffled, seed=3)

    def test_too_few_records_rejected(self):
        with pytest.raises(ValueError, match="at least 3"):
            split_ids(["a", "b"])

    def test_bad_ratios_rejected(self):
        ids = [f"r{i}" for i in range(10)]
        with pytest.raises(ValueError):
            split_ids(ids, ratios=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError):
            split_ids(ids, ratios=(0.9, -0.1, 0.2))

    def test_split_dataset_wraps_records(self):
        records = [DatasetRecord(f"r{i}", np.zeros((2, 2))) for i in range(10)]
        split = split_dataset(records, seed=42)
        assert split.seed == 42
        assert len(split.train) == 7
        assert sorted(split.train + split.val + split.test) == sorted(r.id for r in records)

    def test_split_json_round_trip(self, tmp_path):
        records = [DatasetRecord(f"r{i}", np.zeros((2, 2))) for i in range(12)]
        split = split_dataset(records, seed=7)
        path = tmp_path / "split.json"
        save_split(path, split)
        back = load_split(path)
        assert back == split


class TestFlatten:
    def test_row_major_order(self):
        img = np.arange(6, dtype=np.float64).reshape(2, 3) / 10.0
        records = [DatasetRecord("only", img)]
        m = flatten(records)
        np.testing.assert_array_equal(m.data[0], img.ravel())
        assert m.row_ids == ["only"]

    def test_round_trip(self):
        rng = np.random.default_rng(17)
        records = [DatasetRecord(f"r{i}", rng.random((4, 6))) for i in range(5)]
        m = flatten(records)
        back = unflatten(m, 4, 6)
        for rec, arr in zip(records, back):
            np.testing.assert_array_equal(rec.image, arr)

    def test_mask_field(self):
        mask = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        records = [DatasetRecord("a", np.zeros((2, 2)), mask)]
        m = flatten(records, field="mask")
        np.testing.assert_array_equal(m.data[0], [0.0, 1.0, 1.0, 0.0])

    def test_mixed_shapes_rejected(self):
        records = [
            DatasetRecord("a", np.zeros((2, 2))),
            DatasetRecord("b", np.zeros((3, 3))),
        ]
        with pytest.raises(ValueError, match="shape"):
            flatten(records)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            flatten([])

    def test_wrong_element_count_on_unflatten(self):
        m = umx.DataMatrix(np.zeros((1, 6)), ["a"])
        with pytest.raises(ValueError, match="6"):
            unflatten(m, 2, 2)
