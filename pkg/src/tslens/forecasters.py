"""Black-box forecaster interface and hermetic built-in baselines.

Every forecaster maps a (d, b) input to a (d, h) forecast, is deterministic,
and counts its predictions so analysis call budgets can be asserted.  The
built-ins (naive, seasonal naive, per-channel ridge linear AR) are all
channel-separable: channel c's forecast depends only on channel c's input.
"""

import threading

import numpy as np

from .series import Series, make_windows


class FitError(RuntimeError):
    """Model fitting failed."""


class SingularSystemError(FitError):
    """Normal equations are singular; raise the ridge strength."""


class Forecaster:
    """Base class: shape validation, prediction counting, batching."""

    def __init__(self, name: str, lookback: int, horizon: int, channels: int, concurrent_safe: bool = True):
        self.name = name
        self.lookback = lookback
        self.horizon = horizon
        self.channels = channels
        self.concurrent_safe = concurrent_safe
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def call_count(self) -> int:
        return self._calls

    def reset_call_count(self) -> None:
        with self._lock:
            self._calls = 0

    def _count(self, n: int) -> None:
        with self._lock:
            self._calls += n

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1 and self.channels == 1:
            x = x[None, :]
        if x.shape != (self.channels, self.lookback):
            raise ValueError(
                f"{self.name}: expected input shape ({self.channels}, {self.lookback}), got {x.shape}"
            )
        return x

    def _check_output(self, yhat: np.ndarray) -> np.ndarray:
        yhat = np.asarray(yhat, dtype=np.float64)
        if yhat.shape != (self.channels, self.horizon):
            raise ValueError(
                f"{self.name}: forecast shape {yhat.shape}, expected ({self.channels}, {self.horizon})"
            )
        if not np.all(np.isfinite(yhat)):
            raise ValueError(f"{self.name}: forecast contains non-finite values")
        return yhat

    def predict(self, x) -> np.ndarray:
        x = self._check_input(x)
        self._count(1)
        return self._check_output(self._forecast(x))

    def predict_batch(self, xs) -> list[np.ndarray]:
        """Forecast several inputs; order is preserved.

        The default loops over predict; bridged models override this with a
        single wire request.  Counts one prediction per input either way.
        """
        return [self.predict(x) for x in xs]

    def _forecast(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class NaiveForecaster(Forecaster):
    """Repeats the last observed value of each channel across the horizon."""

    def __init__(self, lookback: int, horizon: int, channels: int = 1):
        super().__init__("naive", lookback, horizon, channels)

    def _forecast(self, x):
        return np.repeat(x[:, -1:], self.horizon, axis=1)


class SeasonalNaiveForecaster(Forecaster):
    """Repeats the last full period: step n copies x[b - k + ((n-1) mod k)]."""

    def __init__(self, lookback: int, horizon: int, period: int, channels: int = 1):
        if not 1 <= period <= lookback:
            raise ValueError(f"period must be in 1..{lookback}, got {period}")
        super().__init__(f"seasonal-naive:{period}", lookback, horizon, channels)
        self.period = period

    def _forecast(self, x):
        cols = [x.shape[1] - self.period + ((n - 1) % self.period) for n in range(1, self.horizon + 1)]
        return x[:, cols]


class LinearARForecaster(Forecaster):
    """Per-channel ridge regression of each horizon step on the b lags.

    coefficients has shape (d, h, b + 1); the trailing weight is an
    unpenalized intercept.  Prediction is affine in the input, which makes
    change ratios exactly constant across same-sign scale parameters.
    """

    def __init__(self, lookback: int, horizon: int, coefficients: np.ndarray, ridge_lambda: float):
        coefficients = np.asarray(coefficients, dtype=np.float64)
        if coefficients.ndim != 3 or coefficients.shape[1:] != (horizon, lookback + 1):
            raise ValueError(f"coefficients must be (d, {horizon}, {lookback + 1}), got {coefficients.shape}")
        if not np.all(np.isfinite(coefficients)):
            raise FitError("coefficients contain non-finite values")
        super().__init__("linear", lookback, horizon, coefficients.shape[0])
        self.coefficients = coefficients
        self.ridge_lambda = ridge_lambda

    def _forecast(self, x):
        out = np.empty((self.channels, self.horizon))
        for c in range(self.channels):
            augmented = np.append(x[c], 1.0)
            out[c] = self.coefficients[c] @ augmented
        return out


def fit_linear_ar(train: Series, b: int, h: int, ridge_lambda: float = 1e-6) -> LinearARForecaster:
    """Fit the linear AR baseline on all stride-1 windows of a training split.

    Solves (X'X + lambda * D) B = X'Y per channel, where X is the lag matrix
    with an intercept column and D excludes the intercept from the penalty.
    The normal-equation residual must close to 1e-8 relative or fitting fails.
    """
    if ridge_lambda < 0:
        raise ValueError(f"ridge strength must be >= 0, got {ridge_lambda}")
    windows = make_windows(train, b=b, h=h, stride=1)
    if not windows:
        raise FitError(f"training split of {train.n} steps yields no ({b}, {h}) windows")
    d = train.d
    coefficients = np.empty((d, h, b + 1))
    penalty = ridge_lambda * np.eye(b + 1)
    penalty[b, b] = 0.0  # intercept is not shrunk
    for c in range(d):
        X = np.stack([np.append(w.x[c], 1.0) for w in windows])
        Y = np.stack([w.y[c] for w in windows])
        gram = X.T @ X + penalty
        moment = X.T @ Y
        try:
            beta = np.linalg.solve(gram, moment)
        except np.linalg.LinAlgError:
            raise SingularSystemError(
                f"normal equations singular for channel {c} with lambda={ridge_lambda}; "
                "raise the ridge strength"
            ) from None
        residual = np.linalg.norm(gram @ beta - moment)
        if residual > 1e-8 * max(1.0, np.linalg.norm(moment)):
            raise FitError(f"normal-equation residual {residual:.3e} too large for channel {c}")
        coefficients[c] = beta.T
    return LinearARForecaster(b, h, coefficients, ridge_lambda)
