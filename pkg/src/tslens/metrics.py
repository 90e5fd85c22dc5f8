"""Forecast accuracy metrics: MAE, MSE, sMAPE, MASE, OWA, normalized error.

Multivariate errors are pooled over all channels and horizon steps, so each
metric is a single number per evaluation.  Undefined values (zero reference
errors, constant training data) are reported as None rather than raised.
"""

from dataclasses import dataclass

import numpy as np

from .series import Series


def _paired(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    return y.ravel(), yhat.ravel()


def mae(y, yhat) -> float:
    """Mean absolute error over all channels and steps."""
    y, yhat = _paired(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def mse(y, yhat) -> float:
    """Mean squared error over all channels and steps."""
    y, yhat = _paired(y, yhat)
    return float(np.mean((y - yhat) ** 2))


def smape(y, yhat) -> float:
    """Symmetric MAPE in percent: (200/N) sum |y - yhat| / (|y| + |yhat|).

    Terms with |y| + |yhat| == 0 contribute 0.
    """
    y, yhat = _paired(y, yhat)
    denom = np.abs(y) + np.abs(yhat)
    terms = np.zeros_like(denom)
    nonzero = denom > 0
    terms[nonzero] = np.abs(y - yhat)[nonzero] / denom[nonzero]
    return float(200.0 * terms.mean())


def seasonal_naive_scale(train: Series, season: int = 1) -> float:
    """In-sample one-step seasonal-naive MAE of the training split.

    The mean over channels and steps i of |train_i - train_{i-season}|.
    """
    if season < 1:
        raise ValueError(f"season must be >= 1, got {season}")
    if train.n <= season:
        raise ValueError(f"training split of {train.n} steps too short for season {season}")
    diffs = np.abs(train.values[:, season:] - train.values[:, :-season])
    return float(diffs.mean())


def mase(y, yhat, train: Series, season: int = 1) -> float | None:
    """MAE scaled by the training split's seasonal-naive error; None if that
    scale is zero (constant training data)."""
    scale = seasonal_naive_scale(train, season)
    if scale == 0.0:
        return None
    return mae(y, yhat) / scale


@dataclass
class MetricReport:
    """Pooled metrics for one forecaster on one window set.

    owa and e_norm are filled in against a reference report; a None value
    means undefined (for example a zero-error reference).
    """

    mae: float
    mse: float
    smape: float
    mase: float | None
    owa: float | None = None
    e_norm: float | None = None
    reference_name: str | None = None
    per_window: list[dict] | None = None

    def to_json_dict(self) -> dict:
        out = {
            "mae": self.mae,
            "mse": self.mse,
            "smape": self.smape,
            "mase": self.mase,
            "owa": self.owa,
            "e_norm": self.e_norm,
            "reference_name": self.reference_name,
        }
        if self.per_window is not None:
            out["per_window"] = self.per_window
        return out


def _ratio(num: float | None, den: float | None) -> float | None:
    if num is None or den is None or den == 0.0:
        return None
    return num / den


def owa(report: MetricReport, reference: MetricReport) -> float | None:
    """Mean of the sMAPE and MASE ratios against a reference forecaster.

    Both reports must come from identical windows; the reference is the
    naive forecaster by convention, whose own OWA is exactly 1.
    """
    smape_ratio = _ratio(report.smape, reference.smape)
    mase_ratio = _ratio(report.mase, reference.mase)
    if smape_ratio is None or mase_ratio is None:
        return None
    return 0.5 * (smape_ratio + mase_ratio)


def e_norm(report: MetricReport, naive_report: MetricReport) -> float | None:
    """Mean of the MAE and MSE ratios against the naive forecaster."""
    mae_ratio = _ratio(report.mae, naive_report.mae)
    mse_ratio = _ratio(report.mse, naive_report.mse)
    if mae_ratio is None or mse_ratio is None:
        return None
    return 0.5 * (mae_ratio + mse_ratio)


def attach_reference(report: MetricReport, reference: MetricReport, reference_name: str) -> MetricReport:
    """Fill owa and e_norm on a report from a reference report."""
    report.owa = owa(report, reference)
    report.e_norm = e_norm(report, reference)
    report.reference_name = reference_name
    return report


def evaluate_forecaster(model, windows, train: Series, season: int = 1,
                        per_window: bool = False) -> MetricReport:
    """Forecast every window and pool the errors into one report.

    Windows must carry ground truth.  MASE uses the training split's
    seasonal-naive scale with the given season length.
    """
    windows = list(windows)
    if not windows:
        raise ValueError("need at least one window with ground truth")
    truths, forecasts, breakdown = [], [], []
    for i, window in enumerate(windows):
        if window.y is None:
            raise ValueError(f"window {i} has no ground truth")
        yhat = model.predict(window.x)
        truths.append(window.y)
        forecasts.append(yhat)
        if per_window:
            breakdown.append({
                "origin_index": window.origin_index,
                "mae": mae(window.y, yhat),
                "mse": mse(window.y, yhat),
                "smape": smape(window.y, yhat),
            })
    y = np.concatenate([t.ravel() for t in truths])
    yhat = np.concatenate([f.ravel() for f in forecasts])
    scale = seasonal_naive_scale(train, season)
    return MetricReport(
        mae=mae(y, yhat),
        mse=mse(y, yhat),
        smape=smape(y, yhat),
        mase=(mae(y, yhat) / scale) if scale > 0 else None,
        per_window=breakdown if per_window else None,
    )
