"""Change-ratio analysis: perturb, re-forecast, and aggregate.

The unit of work is one (input window, perturbation, scale) triple: perturb
the input, query the forecaster once, and divide the shift of an output
property by the input distance.  A full scan caches the unperturbed
forecast, so one property costs |scales| + 1 predictions, a time-step scan
b * |scales| + 1, and a cross-channel scan d * b * |scales| + 1 per window.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .perturb import ANCHORS, PerturbationSpec, apply_perturbation
from .properties import Property, eval_property
from .series import Window

DEFAULT_SCALES = (-0.1, -0.05, -0.01, 0.01, 0.05, 0.1)

SUMMARY_INPUTS = ("min", "max", "mean", "variance", "trend")


class DegeneratePerturbationError(ValueError):
    """A perturbation left the input unchanged, so no ratio exists."""


@dataclass(frozen=True)
class AnalysisConfig:
    """Scan parameters: the scale set and the per-family knobs."""

    scales: tuple[float, ...] = DEFAULT_SCALES
    width: int = 2
    softness: float = 1.0
    epsilon: float = 1e-8
    seasonality: int = 1
    trend_anchor: str = "left"
    t_stride: int = 1  # sparsified index grid for cross-channel scans

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(a) for a in self.scales))
        if not self.scales:
            raise ValueError("need at least one scale parameter")
        if any(a == 0 or not math.isfinite(a) for a in self.scales):
            raise ValueError(f"scale parameters must be finite and non-zero, got {self.scales}")
        if self.width < 0:
            raise ValueError(f"width must be >= 0, got {self.width}")
        if self.softness <= 0:
            raise ValueError(f"softness must be > 0, got {self.softness}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.seasonality < 1:
            raise ValueError(f"seasonality must be >= 1, got {self.seasonality}")
        if self.trend_anchor not in ANCHORS:
            raise ValueError(f"unknown trend anchor {self.trend_anchor!r}")
        if self.t_stride < 1:
            raise ValueError(f"t_stride must be >= 1, got {self.t_stride}")


@dataclass(frozen=True)
class ChangeRatioMatrix:
    """A labeled grid of mean change ratios averaged over sample windows."""

    values: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    sample_count: int
    skipped: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        if values.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(f"matrix shape {values.shape} does not match labels")
        if not np.all(np.isfinite(values)):
            raise ValueError("change ratios must be finite")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass(frozen=True)
class CrossChannelMatrix:
    """d x d grid of aggregated absolute change ratios, source x target."""

    values: np.ndarray
    channel_names: tuple[str, ...]
    sample_count: int
    skipped: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        d = len(self.channel_names)
        if values.shape != (d, d):
            raise ValueError(f"expected a ({d}, {d}) matrix, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("cross-channel entries must be finite and non-negative")


@dataclass(frozen=True)
class ImportanceVector:
    """Per-input-step mean change ratios for one output property."""

    values: np.ndarray
    property_token: str
    sample_count: int
    skipped: int = 0


# -- small helpers ---------------------------------------------------------


def _as_input(x) -> np.ndarray:
    if isinstance(x, Window):
        return x.x
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return x


def _sgn(alpha: float) -> float:
    return 1.0 if alpha > 0 else -1.0


def _resolve_channel(d: int, channel: int | None, role: str) -> int:
    if channel is None:
        if d == 1:
            return 0
        raise ValueError(f"input has {d} channels; specify a {role} channel")
    if not 0 <= channel < d:
        raise ValueError(f"{role} channel {channel} out of range for {d} channels")
    return channel


def _output_row(yhat: np.ndarray, channel: int | None) -> np.ndarray:
    return yhat[_resolve_channel(yhat.shape[0], channel, "target")]


def _eval_output(prop: Property, yhat: np.ndarray) -> float:
    return eval_property(prop, _output_row(yhat, prop.target_channel))


def _perturb_checked(x: np.ndarray, spec: PerturbationSpec):
    pw = apply_perturbation(x, spec)
    if pw.delta == 0.0:
        where = f"t={spec.t}, " if spec.family == "index" else ""
        raise DegeneratePerturbationError(
            f"{spec.family} perturbation ({where}alpha={spec.alpha}) left the input unchanged; "
            "the change ratio is undefined"
        )
    return pw


def _index_spec(t: int, alpha: float, channel: int | None, config: AnalysisConfig) -> PerturbationSpec:
    return PerturbationSpec(
        family="index", alpha=alpha, t=t, channel=channel,
        w=config.width, s=config.softness, epsilon=config.epsilon,
    )


def _map_windows(fn, windows, model, jobs: int):
    if jobs > 1 and model.concurrent_safe:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, windows))
    return [fn(w) for w in windows]


def _collect(results, what: str):
    used = [m for m in results if m is not None]
    skipped = len(results) - len(used)
    if skipped:
        warnings.warn(f"{what}: skipped {skipped} of {len(results)} window(s) with degenerate perturbations")
    if not used:
        raise DegeneratePerturbationError(f"{what}: every window produced a degenerate perturbation")
    return np.mean(np.stack(used), axis=0), len(used), skipped


# -- single-window operations ----------------------------------------------


def change_ratio(model, x, spec: PerturbationSpec, prop: Property) -> float:
    """Shift of one output property per unit input distance, for one scale."""
    x = _as_input(x)
    yhat = model.predict(x)
    pw = _perturb_checked(x, spec)
    yhat_p = model.predict(pw.x_prime)
    return (_eval_output(prop, yhat_p) - _eval_output(prop, yhat)) / pw.delta


def scale_change_ratios(model, x, spec: PerturbationSpec, prop: Property,
                        config: AnalysisConfig, yhat: np.ndarray | None = None):
    """Change ratios per scale parameter, caching the unperturbed forecast.

    The template spec's alpha is replaced by each config scale in turn.
    Returns a list of (alpha, ratio) pairs in scale order.
    """
    x = _as_input(x)
    if yhat is None:
        yhat = model.predict(x)
    base = _eval_output(prop, yhat)
    perturbed = [_perturb_checked(x, replace(spec, alpha=a)) for a in config.scales]
    forecasts = model.predict_batch([pw.x_prime for pw in perturbed])
    return [
        (a, (_eval_output(prop, yp) - base) / pw.delta)
        for a, pw, yp in zip(config.scales, perturbed, forecasts)
    ]


def mean_change_ratio(model, x, spec: PerturbationSpec, prop: Property,
                      config: AnalysisConfig) -> float:
    """Sign-corrected average of change ratios over all scale parameters."""
    ratios = scale_change_ratios(model, x, spec, prop, config)
    return sum(_sgn(a) * r for a, r in ratios) / len(ratios)


def _window_importance(model, x: np.ndarray, prop: Property, config: AnalysisConfig,
                       channel: int | None) -> np.ndarray:
    b = x.shape[1]
    yhat = model.predict(x)
    base = _eval_output(prop, yhat)
    specs = [_index_spec(t, a, channel, config) for t in range(1, b + 1) for a in config.scales]
    perturbed = [_perturb_checked(x, spec) for spec in specs]
    forecasts = model.predict_batch([pw.x_prime for pw in perturbed])
    vector = np.zeros(b)
    for spec, pw, yp in zip(specs, perturbed, forecasts):
        r = (_eval_output(prop, yp) - base) / pw.delta
        vector[spec.t - 1] += _sgn(spec.alpha) * r
    return vector / len(config.scales)


def timestep_importance(model, x, prop: Property, config: AnalysisConfig = AnalysisConfig(),
                        source_channel: int | None = None) -> np.ndarray:
    """Mean change ratio of one output property per perturbed input step."""
    x = _as_input(x)
    channel = _resolve_channel(x.shape[0], source_channel, "source")
    return _window_importance(model, x, prop, config, channel)


def aggregate_importance(model, windows, prop: Property, config: AnalysisConfig = AnalysisConfig(),
                         source_channel: int | None = None, jobs: int = 1) -> ImportanceVector:
    """Mean of per-window importance vectors over a window set."""
    windows = list(windows)
    if not windows:
        raise ValueError("need at least one window")
    channel = _resolve_channel(windows[0].d, source_channel, "source")

    def one(window):
        try:
            return _window_importance(model, window.x, prop, config, channel)
        except DegeneratePerturbationError:
            return None

    values, used, skipped = _collect(_map_windows(one, windows, model, jobs), "importance")
    return ImportanceVector(values=values, property_token=prop.token(), sample_count=used, skipped=skipped)


# -- dataset-level matrices --------------------------------------------------


def dependency_matrix(model, windows, config: AnalysisConfig = AnalysisConfig(),
                      source_channel: int | None = None, target_channel: int | None = None,
                      jobs: int = 1) -> ChangeRatioMatrix:
    """b x h grid: input step t -> forecast step n mean change ratios.

    Perturbs one source channel by index and reads one target channel of
    the forecast; both default to channel 0 on univariate data and must be
    given explicitly otherwise.
    """
    windows = list(windows)
    if not windows:
        raise ValueError("need at least one window")
    d, b = windows[0].d, windows[0].b
    h = model.horizon
    src = _resolve_channel(d, source_channel, "source")
    tgt = _resolve_channel(d, target_channel, "target")

    def one(window):
        x = window.x
        yhat = model.predict(x)
        base = yhat[tgt]
        try:
            specs = [_index_spec(t, a, src, config) for t in range(1, b + 1) for a in config.scales]
            perturbed = [_perturb_checked(x, spec) for spec in specs]
        except DegeneratePerturbationError:
            return None
        forecasts = model.predict_batch([pw.x_prime for pw in perturbed])
        matrix = np.zeros((b, h))
        for spec, pw, yp in zip(specs, perturbed, forecasts):
            matrix[spec.t - 1] += _sgn(spec.alpha) * (yp[tgt] - base) / pw.delta
        return matrix / len(config.scales)

    values, used, skipped = _collect(_map_windows(one, windows, model, jobs), "dependency matrix")
    return ChangeRatioMatrix(
        values=values,
        row_labels=tuple(str(t) for t in range(1, b + 1)),
        col_labels=tuple(str(n) for n in range(1, h + 1)),
        sample_count=used,
        skipped=skipped,
    )


def channel_pair_matrix(model, windows, source_channel: int, target_channel: int,
                        config: AnalysisConfig = AnalysisConfig(), jobs: int = 1) -> ChangeRatioMatrix:
    """Dependency matrix for one directed channel pair of multivariate data."""
    windows = list(windows)
    if not windows:
        raise ValueError("need at least one window")
    if windows[0].d < 2:
        raise ValueError("channel-pair analysis needs multivariate data (d > 1)")
    return dependency_matrix(model, windows, config,
                             source_channel=source_channel, target_channel=target_channel, jobs=jobs)


def _prop_label(prop: Property) -> str:
    base = f"step:{prop.n}" if prop.kind == "value_at" else prop.kind
    if prop.target_channel is not None:
        return f"{base}@{prop.target_channel}"
    return base


def _summary_spec(token: str, alpha: float, x: np.ndarray, channel: int | None,
                  config: AnalysisConfig) -> PerturbationSpec:
    if token == "mean":
        return PerturbationSpec(family="mean", alpha=alpha, channel=channel)
    if token == "variance":
        return PerturbationSpec(family="variance", alpha=alpha, channel=channel)
    if token == "trend":
        return PerturbationSpec(family="trend", alpha=alpha, channel=channel,
                                k=config.seasonality, anchor=config.trend_anchor)
    row = x[channel if channel is not None else 0]
    t = int(np.argmin(row)) + 1 if token == "min" else int(np.argmax(row)) + 1
    return _index_spec(t, alpha, channel, config)


def summary_matrix(model, windows, input_props=SUMMARY_INPUTS, output_props=None,
                   config: AnalysisConfig = AnalysisConfig(), source_channel: int | None = None,
                   jobs: int = 1) -> ChangeRatioMatrix:
    """Input summary statistic x output property mean change ratios.

    Input rows name perturbation families: "mean", "variance" and "trend"
    scale those statistics directly, while "min" and "max" perturb the
    window at its extremum (earliest index on ties).  Multivariate data
    needs an explicit source channel and per-property target channels.
    """
    windows = list(windows)
    if not windows:
        raise ValueError("need at least one window")
    for token in input_props:
        if token not in SUMMARY_INPUTS:
            raise ValueError(f"unknown input property {token!r}, expected one of {SUMMARY_INPUTS}")
    if output_props is None:
        output_props = [
            Property(kind=kind) for kind in ("min", "max", "mean", "variance", "trend")
        ]
    d = windows[0].d
    channel = None if (d == 1 and source_channel is None) else _resolve_channel(d, source_channel, "source")

    def one(window):
        x = window.x
        yhat = model.predict(x)
        bases = [_eval_output(prop, yhat) for prop in output_props]
        try:
            specs = [_summary_spec(token, a, x, channel, config)
                     for token in input_props for a in config.scales]
            perturbed = [_perturb_checked(x, spec) for spec in specs]
        except DegeneratePerturbationError:
            return None
        forecasts = model.predict_batch([pw.x_prime for pw in perturbed])
        matrix = np.zeros((len(input_props), len(output_props)))
        n_scales = len(config.scales)
        for idx, (spec, pw, yp) in enumerate(zip(specs, perturbed, forecasts)):
            row = idx // n_scales
            for col, prop in enumerate(output_props):
                r = (_eval_output(prop, yp) - bases[col]) / pw.delta
                matrix[row, col] += _sgn(spec.alpha) * r
        return matrix / n_scales

    values, used, skipped = _collect(_map_windows(one, windows, model, jobs), "summary matrix")
    return ChangeRatioMatrix(
        values=values,
        row_labels=tuple(input_props),
        col_labels=tuple(_prop_label(prop) for prop in output_props),
        sample_count=used,
        skipped=skipped,
    )


def cross_channel(model, windows, config: AnalysisConfig = AnalysisConfig(),
                  channel_names=None, jobs: int = 1) -> CrossChannelMatrix:
    """d x d aggregated |change ratio| from each source to each target channel.

    For every source channel, every input step on the (possibly sparsified)
    index grid, and every scale: perturb, re-forecast, and average the
    absolute per-output-step ratios over steps, grid and scales.
    """
    windows = list(windows)
    if not windows:
        raise ValueError("need at least one window")
    d, b = windows[0].d, windows[0].b
    if d < 2:
        raise ValueError("cross-channel analysis needs multivariate data (d > 1)")
    t_grid = list(range(1, b + 1, config.t_stride))

    def one(window):
        x = window.x
        yhat = model.predict(x)
        try:
            specs = [_index_spec(t, a, c, config)
                     for c in range(d) for t in t_grid for a in config.scales]
            perturbed = [_perturb_checked(x, spec) for spec in specs]
        except DegeneratePerturbationError:
            return None
        forecasts = model.predict_batch([pw.x_prime for pw in perturbed])
        matrix = np.zeros((d, d))
        for spec, pw, yp in zip(specs, perturbed, forecasts):
            abs_ratios = np.abs(yp - yhat) / pw.delta  # (d, h)
            matrix[spec.channel] += abs_ratios.mean(axis=1)
        return matrix / (len(t_grid) * len(config.scales))

    values, used, skipped = _collect(_map_windows(one, windows, model, jobs), "cross-channel matrix")
    names = tuple(channel_names) if channel_names is not None else tuple(str(c) for c in range(d))
    return CrossChannelMatrix(values=values, channel_names=names, sample_count=used, skipped=skipped)
