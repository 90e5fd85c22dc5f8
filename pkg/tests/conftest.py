import numpy as np
import pytest

from tslens import ScalingStats, Series, SplitSpec, make_windows, split, standardize


def seasonal_series(n=600, period=12, channels=1, trend=0.01, noise=0.25, seed=7) -> Series:
    """Sine + trend + noise test data, deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    rows = []
    for c in range(channels):
        phase = 2.0 * np.pi * c / max(channels, 1)
        rows.append(10.0 + 3.0 * np.sin(2.0 * np.pi * t / period + phase)
                    + trend * t + noise * rng.standard_normal(n))
    return Series(values=np.stack(rows), channel_names=tuple(f"ch{c}" for c in range(channels)))


@pytest.fixture(scope="session")
def desk_series() -> Series:
    return seasonal_series()


@pytest.fixture(scope="session")
def desk_split(desk_series):
    """Standardized train split and test windows with the default layout."""
    train, _val, test = split(desk_series, SplitSpec(), min_segment=40)
    stats = ScalingStats.from_series(train)
    train_s = standardize(train, stats)
    test_s = standardize(test, stats)
    windows = make_windows(test_s, b=20, h=20, stride=1)
    return train_s, windows


@pytest.fixture(scope="session")
def desk_csv(tmp_path_factory, desk_series):
    path = tmp_path_factory.mktemp("data") / "seasonal.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(desk_series.channel_names) + "\n")
        for step in range(desk_series.n):
            handle.write(",".join(repr(float(v)) for v in desk_series.values[:, step]) + "\n")
    return path
