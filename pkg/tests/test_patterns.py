import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tslens import (
    AnalysisConfig,
    NaiveForecaster,
    SeasonalNaiveForecaster,
    Window,
    classify,
    classify_matrix,
    dependency_matrix,
    extract_features,
)
from tslens.patterns import LABELS, PatternThresholds

POINT = AnalysisConfig(width=0)


def seasonal_support_matrix(b, h, k, value=1.0) -> np.ndarray:
    """The w=0 seasonal-naive dependency pattern: one cell per forecast step."""
    m = np.zeros((b, h))
    for n in range(1, h + 1):
        m[b - k + ((n - 1) % k), n - 1] = value
    return m


class TestFeatures:
    def test_pure_diagonal_mass(self):
        m = seasonal_support_matrix(6, 4, k=3)
        f = extract_features(m, k=3)
        assert f.diagonal_mass == 1.0

    def test_last_row_mass(self):
        m = np.zeros((4, 3))
        m[3] = 2.0
        f = extract_features(m, k=2)
        assert f.last_row_mass == 1.0

    def test_uniform_matrix_features(self):
        f = extract_features(np.ones((4, 2)), k=2)
        assert f.sign_homogeneity == 1.0
        assert f.density == 1.0
        # every second lag is seasonal for k=2, so half the cells qualify
        assert f.diagonal_mass == pytest.approx(0.5)
        assert f.diagonal_baseline == pytest.approx(0.5)

    def test_all_zero_flagged(self):
        f = extract_features(np.zeros((3, 3)), k=2)
        assert f.all_zero
        assert f.diagonal_mass == 0.0 and f.density == 0.0

    def test_band_absorbs_smoothing(self):
        m = seasonal_support_matrix(20, 20, k=12)
        # smear each support cell one row up and down, as w=1 smoothing would
        smeared = m.copy()
        smeared[1:] += 0.5 * m[:-1]
        smeared[:-1] += 0.5 * m[1:]
        strict = extract_features(smeared, k=12, band=0)
        banded = extract_features(smeared, k=12, band=1)
        assert strict.diagonal_mass < 1.0
        assert banded.diagonal_mass == pytest.approx(1.0)

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="at least 2 x 2"):
            extract_features(np.ones((1, 5)), k=1)
        with pytest.raises(ValueError, match="out of range"):
            extract_features(np.ones((4, 4)), k=9)

    @given(
        c=st.floats(min_value=-100, max_value=100, allow_nan=False).filter(lambda v: abs(v) > 1e-6),
        seed=st.integers(min_value=0, max_value=500),
    )
    @settings(max_examples=60)
    def test_scale_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((6, 5))
        base = classify(extract_features(m, k=3))
        scaled = classify(extract_features(c * m, k=3))
        assert base.label == scaled.label


class TestClassifier:
    def test_seasonal_naive_is_diagonals(self):
        label = classify(extract_features(seasonal_support_matrix(4, 2, k=2), k=2))
        assert label.label == "diagonals"

    def test_longer_horizon_seasonal_is_diagonals(self):
        label = classify(extract_features(seasonal_support_matrix(20, 20, k=12), k=12))
        assert label.label == "diagonals"

    def test_naive_is_last_timestep(self):
        m = np.zeros((4, 3))
        m[3] = 1.0
        assert classify(extract_features(m, k=1)).label == "last_timestep"

    def test_uniform_is_fully_correlated(self):
        assert classify(extract_features(np.ones((4, 2)), k=2)).label == "fully_correlated"
        assert classify(extract_features(-np.ones((6, 6)), k=3)).label == "fully_correlated"

    def test_bipolar_blocks(self):
        m = np.ones((6, 4))
        m[3:] = -1.0
        label = classify(extract_features(m, k=3))
        assert label.label == "bipolar_regions"

    def test_repeated_old_period_is_diagonals_end(self):
        # support confined to the last period rows at a two-period lag:
        # diagonal structure that only echoes the window's end
        m = np.zeros((9, 6))
        for t, n in ((7, 4), (8, 5), (9, 6)):
            m[t - 1, n - 1] = 1.0
        assert classify(extract_features(m, k=3)).label == "diagonals_end"

    def test_noise_is_other(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((8, 8))
        assert classify(extract_features(m, k=4)).label == "other"

    def test_all_zero_is_other(self):
        assert classify(extract_features(np.zeros((3, 3)), k=2)).label == "other"

    def test_thresholds_versioned(self):
        label = classify(extract_features(np.ones((4, 2)), k=2))
        assert label.thresholds_version == "v1"
        custom = PatternThresholds(version="v2-test", homogeneity=1.1)
        relabeled = classify(extract_features(np.ones((4, 2)), k=2), custom)
        assert relabeled.thresholds_version == "v2-test"
        assert relabeled.label != "fully_correlated"

    @given(seed=st.integers(min_value=0, max_value=2000))
    @settings(max_examples=120)
    def test_every_matrix_gets_exactly_one_label(self, seed):
        rng = np.random.default_rng(seed)
        b = int(rng.integers(2, 12))
        h = int(rng.integers(2, 12))
        k = int(rng.integers(1, b + 1))
        style = rng.integers(0, 4)
        m = rng.standard_normal((b, h))
        if style == 1:
            m = np.abs(m)
        elif style == 2:
            m = np.zeros((b, h))
        elif style == 3:
            m[rng.standard_normal((b, h)) > -0.5] = 0.0
        label = classify(extract_features(m, k=k))
        assert label.label in LABELS

    def test_serialization_labels(self):
        payload = classify(extract_features(np.ones((4, 2)), k=2)).to_json_dict()
        assert payload["class"] == "fully_correlated"
        assert set(payload) == {"class", "features", "thresholds_version"}


class TestEngineIntegration:
    def test_engine_seasonal_matrix_classifies_diagonals(self):
        model = SeasonalNaiveForecaster(4, 2, period=2)
        matrix = dependency_matrix(model, [Window(x=np.array([[1.0, 2, 3, 4]]))], POINT)
        assert classify_matrix(matrix, k=2, band=0).label == "diagonals"

    def test_engine_naive_matrix_classifies_last_timestep(self):
        model = NaiveForecaster(4, 3, 1)
        matrix = dependency_matrix(model, [Window(x=np.array([[1.0, 2, 3, 4]]))], POINT)
        assert classify_matrix(matrix, k=1, band=0).label == "last_timestep"

    def test_smoothed_scan_with_band(self, desk_split):
        _train, windows = desk_split
        model = SeasonalNaiveForecaster(20, 20, period=12)
        config = AnalysisConfig(seasonality=12)  # default w=2 smoothing
        matrix = dependency_matrix(model, windows[:20], config)
        assert classify_matrix(matrix, k=12, band=config.width).label == "diagonals"
