import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tslens import (
    ScalingStats,
    Series,
    SplitSpec,
    load_csv,
    make_windows,
    save_csv,
    split,
    standardize,
    unstandardize,
)
from tslens.series import CsvFormatError, SplitError, WindowError


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_two_columns(self, tmp_path):
        s = load_csv(write(tmp_path, "a,b\n1,4\n2,5\n3,6\n"))
        assert s.d == 2 and s.n == 3
        assert s.values.tolist() == [[1, 2, 3], [4, 5, 6]]
        assert s.channel_names == ("a", "b")

    def test_single_column(self, tmp_path):
        s = load_csv(write(tmp_path, "v\n1\n2\n3\n4\n5\n"))
        assert s.d == 1 and s.n == 5

    def test_non_numeric_cell_names_position(self, tmp_path):
        path = write(tmp_path, "a,b\n1,4\n2,x\n")
        with pytest.raises(CsvFormatError, match=r"line 3.*'b'.*'x'"):
            load_csv(path)

    def test_timestamp_column_skipped(self, tmp_path):
        s = load_csv(write(tmp_path, "timestamp,a\n2020-01-01,1\n2020-01-02,2\n"))
        assert s.d == 1
        assert s.values.tolist() == [[1, 2]]

    def test_column_selection(self, tmp_path):
        s = load_csv(write(tmp_path, "a,b,c\n1,2,3\n4,5,6\n"), columns=["c", "a"])
        assert s.channel_names == ("c", "a")
        assert s.values.tolist() == [[3, 6], [1, 4]]

    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvFormatError, match="no such file"):
            load_csv(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(CsvFormatError, match="empty"):
            load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(CsvFormatError, match="no data rows"):
            load_csv(write(tmp_path, "a,b\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(CsvFormatError, match="line 3 has 3 cells, expected 2"):
            load_csv(write(tmp_path, "a,b\n1,2\n1,2,3\n"))

    def test_nan_cell_rejected(self, tmp_path):
        with pytest.raises(CsvFormatError, match="non-finite"):
            load_csv(write(tmp_path, "a\n1\nnan\n"))

    def test_round_trip_15_digits(self, tmp_path):
        rng = np.random.default_rng(3)
        values = rng.standard_normal((3, 17)) * 10.0 ** rng.integers(-6, 6, size=(3, 17))
        original = Series(values=values, channel_names=("a", "b", "c"))
        path = tmp_path / "round.csv"
        save_csv(original, path)
        reloaded = load_csv(path)
        np.testing.assert_allclose(reloaded.values, original.values, rtol=1e-15)


class TestSplit:
    def test_7_1_2(self):
        s = Series(values=np.arange(10.0)[None, :], channel_names=("a",))
        train, val, test = split(s, SplitSpec())
        assert (train.n, val.n, test.n) == (7, 1, 2)
        assert train.values.tolist() == [[0, 1, 2, 3, 4, 5, 6]]
        assert test.values.tolist() == [[8, 9]]

    def test_degenerate_ratios_all_train(self):
        s = Series(values=np.arange(100.0)[None, :], channel_names=("a",))
        train, val, test = split(s, SplitSpec(ratios=(1.0, 0.0, 0.0)))
        assert train.n == 100 and val is None and test is None

    def test_too_small_for_windowing(self):
        s = Series(values=np.arange(20.0)[None, :], channel_names=("a",))
        with pytest.raises(SplitError, match="test split"):
            split(s, SplitSpec(), min_segment=40)

    def test_ratios_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            SplitSpec(ratios=(0.5, 0.2, 0.2))

    @given(n=st.integers(min_value=10, max_value=500))
    def test_segments_disjoint_and_complete(self, n):
        s = Series(values=np.arange(float(n))[None, :], channel_names=("a",))
        parts = [p for p in split(s, SplitSpec()) if p is not None]
        joined = np.concatenate([p.values for p in parts], axis=1)
        np.testing.assert_array_equal(joined, s.values)


class TestStandardize:
    def test_unit_stats(self):
        s = Series(values=np.array([[1.0, 2.0, 3.0]]), channel_names=("a",))
        stats = ScalingStats.from_series(s)
        out = standardize(s, stats)
        assert abs(out.values.mean()) < 1e-9
        assert abs(out.values.var() - 1.0) < 1e-9

    def test_constant_channel_flagged_and_zeroed(self):
        s = Series(values=np.array([[5.0, 5.0, 5.0], [1.0, 2.0, 3.0]]), channel_names=("a", "b"))
        stats = ScalingStats.from_series(s)
        assert stats.constant_channels == (0,)
        out = standardize(s, stats)
        assert out.values[0].tolist() == [0.0, 0.0, 0.0]

    @given(
        values=st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=64),
            min_size=2, max_size=40,
        )
    )
    @settings(max_examples=60)
    def test_round_trip(self, values):
        s = Series(values=np.array(values)[None, :], channel_names=("a",))
        stats = ScalingStats.from_series(s)
        back = unstandardize(standardize(s, stats), stats)
        np.testing.assert_allclose(back.values, s.values, atol=1e-12 * max(1.0, np.abs(s.values).max()))

    def test_train_stats_applied_to_test(self, desk_series):
        train, _val, test = split(desk_series, SplitSpec())
        stats = ScalingStats.from_series(train)
        train_s = standardize(train, stats)
        assert abs(train_s.values.mean()) < 1e-9
        assert abs(train_s.values.var() - 1.0) < 1e-9
        test_s = standardize(test, stats)
        assert abs(test_s.values.mean()) > 1e-6  # test split keeps its own offset

    def test_per_channel_statistics(self):
        rng = np.random.default_rng(9)
        values = np.stack([rng.normal(50, 3, 200), rng.normal(-4, 0.2, 200)])
        s = Series(values=values, channel_names=("hot", "cold"))
        out = standardize(s, ScalingStats.from_series(s))
        for c in range(2):
            assert abs(out.values[c].mean()) < 1e-9
            assert abs(out.values[c].var() - 1.0) < 1e-9


class TestMakeWindows:
    def test_enumerated_origins(self):
        s = Series(values=np.arange(5.0)[None, :], channel_names=("a",))
        windows = make_windows(s, b=2, h=1, stride=1)
        assert [w.origin_index for w in windows] == [0, 1, 2]
        assert windows[1].x.tolist() == [[1, 2]]
        assert windows[1].y.tolist() == [[3]]

    def test_stride_two(self):
        s = Series(values=np.arange(4.0)[None, :], channel_names=("a",))
        windows = make_windows(s, b=2, h=2, stride=2)
        assert len(windows) == 1

    def test_too_short(self):
        s = Series(values=np.arange(3.0)[None, :], channel_names=("a",))
        with pytest.raises(WindowError, match="need at least b \\+ h = 4"):
            make_windows(s, b=2, h=2)

    @given(
        n=st.integers(min_value=4, max_value=200),
        b=st.integers(min_value=2, max_value=12),
        h=st.integers(min_value=1, max_value=12),
        stride=st.integers(min_value=1, max_value=7),
    )
    def test_count_formula(self, n, b, h, stride):
        s = Series(values=np.arange(float(n))[None, :], channel_names=("a",))
        if n < b + h:
            with pytest.raises(WindowError):
                make_windows(s, b, h, stride)
        else:
            windows = make_windows(s, b, h, stride)
            assert len(windows) == (n - b - h) // stride + 1
            for w in windows:
                np.testing.assert_array_equal(
                    np.concatenate([w.x, w.y], axis=1),
                    s.values[:, w.origin_index : w.origin_index + b + h],
                )


class TestInvariants:
    def test_series_rejects_nan(self):
        with pytest.raises(ValueError, match="finite"):
            Series(values=np.array([[1.0, np.nan]]), channel_names=("a",))

    def test_series_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="distinct"):
            Series(values=np.ones((2, 3)), channel_names=("a", "a"))

    def test_window_requires_b_ge_2(self):
        with pytest.raises(ValueError, match="b >= 2"):
            from tslens import Window

            Window(x=np.array([[1.0]]))
