"""Input perturbations: localized index edits, moment scaling, trend drift.

All perturbations take a channel-major (d, b) input and return a
PerturbedWindow carrying the edited copy and its Euclidean distance to the
original.  Time steps are 1-indexed (t in 1..b), channels 0-indexed.
"""

import math
from dataclasses import dataclass

import numpy as np

FAMILIES = ("index", "mean", "variance", "trend")
ANCHORS = ("left", "symmetric", "right")


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation: its family, scale alpha, and family parameters.

    index    -> t (1-based target step), w (window width, 0 = single point),
                s (Gaussian softness), epsilon (amplitude-weight guard),
                channel (required when the input has more than one channel)
    mean     -> no extra parameters; applies per channel unless one is given
    variance -> alpha must be > -1
    trend    -> k (deseasonalization length, 1..b), anchor
    """

    family: str
    alpha: float
    t: int | None = None
    channel: int | None = None
    w: int = 2
    s: float = 1.0
    epsilon: float = 1e-8
    k: int = 1
    anchor: str = "left"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown perturbation family {self.family!r}, expected one of {FAMILIES}")
        if self.family == "index":
            if self.t is None:
                raise ValueError("index perturbation requires a target step t")
            if self.w < 0:
                raise ValueError(f"width must be >= 0, got {self.w}")
            if self.s <= 0:
                raise ValueError(f"softness must be > 0, got {self.s}")
            if self.epsilon <= 0:
                raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.family == "variance" and self.alpha <= -1:
            raise ValueError(f"variance scaling requires alpha > -1, got {self.alpha}")
        if self.family == "trend":
            if self.k < 1:
                raise ValueError(f"seasonality length must be >= 1, got {self.k}")
            if self.anchor not in ANCHORS:
                raise ValueError(f"unknown trend anchor {self.anchor!r}, expected one of {ANCHORS}")


@dataclass(frozen=True)
class PerturbedWindow:
    """An edited input and its distance to the original."""

    x_prime: np.ndarray
    delta: float
    spec: PerturbationSpec


def positional_weight(i: int, t: int, w: int, s: float) -> float:
    """Gaussian falloff exp(-s ((i-t)/w)^2) inside |i-t| <= w, else 0.

    At i == t the weight is 1 for any w, which also resolves the w == 0
    case to a pure single-point perturbation.
    """
    dist = abs(i - t)
    if dist == 0:
        return 1.0
    if dist > w:
        return 0.0
    return math.exp(-s * (dist / w) ** 2)


def amplitude_weight(xi: float, xt: float, epsilon: float = 1e-8) -> float:
    """Damping in [0, 1] for values whose magnitude differs from the target.

    Magnitudes are compared via absolute values so the weight stays a valid
    damping factor on zero-mean (standardized) data.
    """
    ai, at = abs(xi), abs(xt)
    lo, hi = min(ai, at), max(ai, at)
    return min(1.0, lo / (hi + epsilon))


def distance(x: np.ndarray, x_prime: np.ndarray) -> float:
    """Euclidean norm of the flattened elementwise difference."""
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if x.shape != x_prime.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_prime.shape}")
    return float(np.sqrt(np.sum((x_prime - x) ** 2)))


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"input must be (channels, steps), got ndim={x.ndim}")
    return x


def _target_channels(d: int, channel: int | None) -> range:
    if channel is None:
        return range(d)
    if not 0 <= channel < d:
        raise ValueError(f"channel {channel} out of range for {d} channels")
    return range(channel, channel + 1)


def perturb_index(x, spec: PerturbationSpec) -> PerturbedWindow:
    """Scale values near step t by alpha, smoothed by position and amplitude.

    On the target channel, x'_i = x_i + w_p(i) * w_a(i) * alpha * x_i; every
    other channel and every step with |i - t| > w is left bit-identical.
    """
    x = _as_matrix(x)
    d, b = x.shape
    if spec.family != "index":
        raise ValueError(f"expected an index spec, got family {spec.family!r}")
    if not 1 <= spec.t <= b:
        raise ValueError(f"target step t={spec.t} out of range 1..{b}")
    if d > 1 and spec.channel is None:
        raise ValueError(f"input has {d} channels; index perturbation needs an explicit channel")
    channel = spec.channel if spec.channel is not None else 0
    if not 0 <= channel < d:
        raise ValueError(f"channel {channel} out of range for {d} channels")

    x_prime = x.copy()
    row = x[channel]
    xt = row[spec.t - 1]
    lo = max(1, spec.t - spec.w)
    hi = min(b, spec.t + spec.w)
    for i in range(lo, hi + 1):
        wp = positional_weight(i, spec.t, spec.w, spec.s)
        wa = amplitude_weight(row[i - 1], xt, spec.epsilon)
        x_prime[channel, i - 1] = row[i - 1] + wp * wa * spec.alpha * row[i - 1]
    return PerturbedWindow(x_prime=x_prime, delta=distance(x, x_prime), spec=spec)


def scale_mean(x, alpha: float, channel: int | None = None) -> PerturbedWindow:
    """Shift each channel by alpha times its own mean: x' = x + alpha * mu."""
    x = _as_matrix(x)
    x_prime = x.copy()
    for c in _target_channels(x.shape[0], channel):
        x_prime[c] = x[c] + alpha * x[c].mean()
    spec = PerturbationSpec(family="mean", alpha=alpha, channel=channel)
    return PerturbedWindow(x_prime=x_prime, delta=distance(x, x_prime), spec=spec)


def scale_variance(x, alpha: float, channel: int | None = None) -> PerturbedWindow:
    """Scale each channel's spread: x' = (x - mu) * sqrt(alpha + 1) + mu."""
    if alpha <= -1:
        raise ValueError(f"variance scaling requires alpha > -1, got {alpha}")
    x = _as_matrix(x)
    x_prime = x.copy()
    factor = math.sqrt(alpha + 1.0)
    for c in _target_channels(x.shape[0], channel):
        if alpha == 0.0:  # keep alpha = 0 bit-exact; (x - mu) + mu is not
            continue
        mu = x[c].mean()
        x_prime[c] = (x[c] - mu) * factor + mu
    spec = PerturbationSpec(family="variance", alpha=alpha, channel=channel)
    return PerturbedWindow(x_prime=x_prime, delta=distance(x, x_prime), spec=spec)


def moving_average(v: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Length-k valid moving average and the 0-based indices it aligns to.

    Sample j of the smoothed sequence sits at original index j + (k-1)//2,
    so line fits against these positions live in original coordinates.
    """
    v = np.asarray(v, dtype=np.float64)
    if not 1 <= k <= v.size:
        raise ValueError(f"seasonality length k={k} out of range 1..{v.size}")
    smoothed = np.convolve(v, np.full(k, 1.0 / k), mode="valid")
    positions = np.arange(smoothed.size, dtype=np.float64) + (k - 1) // 2
    return smoothed, positions


def fit_line(values: np.ndarray, positions: np.ndarray) -> tuple[float, float]:
    """Ordinary least squares fit values ~ a + m * positions; returns (a, m).

    A single sample has no identifiable slope; it fits as a flat line
    through the point.
    """
    values = np.asarray(values, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64)
    if values.size != positions.size or values.size == 0:
        raise ValueError("values and positions must be equal-length and non-empty")
    if values.size == 1:
        return float(values[0]), 0.0
    px = positions.mean()
    py = values.mean()
    denom = np.sum((positions - px) ** 2)
    m = float(np.sum((positions - px) * (values - py)) / denom)
    a = float(py - m * px)
    return a, m


def trend_slope(v: np.ndarray, k: int = 1) -> float:
    """OLS slope of the k-deseasonalized sequence, in per-step units."""
    smoothed, positions = moving_average(v, k)
    if smoothed.size < 2:
        raise ValueError(f"sequence of length {np.asarray(v).size} too short for a slope with k={k}")
    _, m = fit_line(smoothed, positions)
    return m


def adjust_trend(x, spec: PerturbationSpec) -> PerturbedWindow:
    """Steepen (or flatten, for alpha < 0) each channel's fitted trend line.

    Per channel: deseasonalize with a length-k moving average, fit a line
    a + m * (i - 1), grow the slope by z = alpha * |m|, and re-anchor the
    intercept so the chosen point of the old line is preserved (left: i=1,
    right: i=b, symmetric: the midpoint).  The edit reduces to
    x'_i = x_i + (a' - a) + z * (i - 1).
    """
    x = _as_matrix(x)
    d, b = x.shape
    if spec.family != "trend":
        raise ValueError(f"expected a trend spec, got family {spec.family!r}")
    if b < 2:
        raise ValueError(f"trend adjustment needs at least 2 steps, got {b}")
    if not 1 <= spec.k <= b:
        raise ValueError(f"seasonality length k={spec.k} out of range 1..{b}")

    x_prime = x.copy()
    ramp = np.arange(b, dtype=np.float64)  # (i - 1) for i = 1..b
    for c in _target_channels(d, spec.channel):
        smoothed, positions = moving_average(x[c], spec.k)
        a, m = fit_line(smoothed, positions)
        z = spec.alpha * m if m >= 0 else -spec.alpha * m
        if spec.anchor == "right":
            shift = -(b - 1) * z
        elif spec.anchor == "symmetric":
            shift = -0.5 * (b - 1) * z
        else:
            shift = 0.0
        x_prime[c] = x[c] + shift + z * ramp
    return PerturbedWindow(x_prime=x_prime, delta=distance(x, x_prime), spec=spec)


def apply_perturbation(x, spec: PerturbationSpec) -> PerturbedWindow:
    """Dispatch a spec to its family's perturbation function."""
    if spec.family == "index":
        return perturb_index(x, spec)
    if spec.family == "mean":
        return scale_mean(x, spec.alpha, spec.channel)
    if spec.family == "variance":
        return scale_variance(x, spec.alpha, spec.channel)
    return adjust_trend(x, spec)
