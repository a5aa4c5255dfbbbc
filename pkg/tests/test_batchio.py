import numpy as np
import pytest

from restrictlab import (
    BatchIoError,
    FeatureBatch,
    read_batch,
    read_batch_csv,
    read_batch_fbv,
    seeded_standard_normal,
    write_batch,
    write_batch_csv,
    write_batch_fbv,
)


class TestCsvRoundTrip:
    def test_bit_exact(self, tmp_path):
        batch = seeded_standard_normal(16, 4, seed=0)
        path = tmp_path / "b.csv"
        write_batch_csv(batch, path)
        back = read_batch_csv(path)
        np.testing.assert_array_equal(back.data, batch.data)

    def test_awkward_values_survive(self, tmp_path):
        data = np.array([[1e-308, -0.0], [1.7976931348623157e308, 1 / 3]])
        path = tmp_path / "b.csv"
        write_batch_csv(FeatureBatch(data), path)
        back = read_batch_csv(path)
        np.testing.assert_array_equal(back.data, data)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("1.0,2.0\n\n3.0,4.0\n\n")
        back = read_batch_csv(path)
        np.testing.assert_array_equal(back.data, [[1.0, 2.0], [3.0, 4.0]])


class TestCsvErrors:
    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("1.0,2.0\n3.0,oops\n")
        with pytest.raises(BatchIoError, match=r"line 2 column 2.*'oops'"):
            read_batch_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(BatchIoError, match="line 2 has 1 columns, expected 2"):
            read_batch_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("")
        with pytest.raises(BatchIoError, match="no data rows"):
            read_batch_csv(path)

    def test_non_finite_cell(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("1.0,nan\n")
        with pytest.raises(BatchIoError):
            read_batch_csv(path)


class TestFbvRoundTrip:
    def test_bit_exact(self, tmp_path):
        batch = seeded_standard_normal(16, 4, seed=0)
        path = tmp_path / "b.fbv"
        write_batch_fbv(batch, path)
        back = read_batch_fbv(path)
        np.testing.assert_array_equal(back.data, batch.data)

    def test_rewrite_produces_identical_bytes(self, tmp_path):
        batch = seeded_standard_normal(8, 3, seed=1)
        p1, p2 = tmp_path / "a.fbv", tmp_path / "b.fbv"
        write_batch_fbv(batch, p1)
        write_batch_fbv(batch, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestFbvErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "b.fbv"
        path.write_bytes(b"XXXX" + b"\x00" * 8)
        with pytest.raises(BatchIoError, match="magic"):
            read_batch_fbv(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "b.fbv"
        path.write_bytes(b"FBV1\x02")
        with pytest.raises(BatchIoError):
            read_batch_fbv(path)

    def test_payload_size_mismatch(self, tmp_path):
        batch = seeded_standard_normal(4, 2, seed=0)
        path = tmp_path / "b.fbv"
        write_batch_fbv(batch, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(BatchIoError, match="payload"):
            read_batch_fbv(path)


class TestDispatch:
    def test_round_trip_both_formats(self, tmp_path):
        batch = seeded_standard_normal(6, 2, seed=2)
        for fmt in ("csv", "fbv"):
            path = tmp_path / f"b.{fmt}"
            write_batch(batch, path, fmt)
            back = read_batch(path, fmt)
            np.testing.assert_array_equal(back.data, batch.data)

    def test_unknown_format(self, tmp_path):
        batch = seeded_standard_normal(2, 2, seed=0)
        with pytest.raises(BatchIoError):
            write_batch(batch, tmp_path / "b.xyz", "xyz")
        with pytest.raises(BatchIoError):
            read_batch(tmp_path / "b.xyz", "xyz")
