"""Heuristic classification of dependency matrices into six pattern classes.

Features are computed on the matrix normalized by its maximum absolute
value, so labels are invariant to rescaling.  A cell (t, n) counts as
seasonally diagonal when its lag b - t + n sits within `band` steps of a
multiple of the period k (band absorbs the smoothing width of index
perturbations).  The decision thresholds are versioned so that future
recalibration cannot silently change labels.
"""

from dataclasses import dataclass

import numpy as np

LABELS = ("diagonals", "diagonals_end", "last_timestep", "bipolar_regions",
          "fully_correlated", "other")


@dataclass(frozen=True)
class PatternThresholds:
    """Decision boundaries for the pattern classifier."""

    version: str = "v1"
    last_row: float = 0.6
    diagonal: float = 0.5
    # diagonal mass must beat the structureless baseline by this factor,
    # otherwise small periods would mark any dense matrix as diagonal
    diagonal_selectivity: float = 1.5
    end_ratio: float = 0.8
    end_mass: float = 0.5
    homogeneity: float = 0.9
    density: float = 0.8
    bipolarity: float = 0.5


DEFAULT_THRESHOLDS = PatternThresholds()


@dataclass(frozen=True)
class PatternFeatures:
    """Shape descriptors of a dependency matrix, all in [0, 1]."""

    diagonal_mass: float
    end_diagonal_mass: float
    last_row_mass: float
    sign_homogeneity: float
    bipolarity: float
    density: float
    diagonal_baseline: float
    all_zero: bool = False

    def to_json_dict(self) -> dict:
        return {
            "diagonal_mass": self.diagonal_mass,
            "end_diagonal_mass": self.end_diagonal_mass,
            "last_row_mass": self.last_row_mass,
            "sign_homogeneity": self.sign_homogeneity,
            "bipolarity": self.bipolarity,
            "density": self.density,
            "diagonal_baseline": self.diagonal_baseline,
            "all_zero": self.all_zero,
        }


@dataclass(frozen=True)
class PatternLabel:
    """One of the six pattern classes plus the features that produced it."""

    label: str
    features: PatternFeatures
    thresholds_version: str

    def to_json_dict(self) -> dict:
        return {
            "class": self.label,
            "features": self.features.to_json_dict(),
            "thresholds_version": self.thresholds_version,
        }


def _values(matrix) -> np.ndarray:
    values = getattr(matrix, "values", matrix)
    return np.asarray(values, dtype=np.float64)


def _diagonal_masks(b: int, h: int, k: int, band: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean (b, h) masks: seasonally-diagonal cells, and their subset that
    repeats an older period inside the last k input rows."""
    t = np.arange(1, b + 1)[:, None]
    n = np.arange(1, h + 1)[None, :]
    lag = b - t + n
    offset = lag % k
    circular = np.minimum(offset, k - offset)
    diagonal = circular <= band
    multiple = np.round(lag / k)
    repetition = diagonal & (multiple >= 2) & (t > b - k)
    return diagonal, repetition


def extract_features(matrix, k: int, band: int = 0, activity_eps: float = 0.05) -> PatternFeatures:
    """Compute the classifier's feature vector for a b x h ratio matrix.

    band widens the diagonal test to +-band lag steps; pass the index
    perturbation width so smoothed scans still register as diagonal.  It is
    clamped to keep the diagonal test meaningful for small periods.  Cells
    below activity_eps of the peak count as inactive for density and
    bipolarity.
    """
    values = _values(matrix)
    if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 2:
        raise ValueError(f"need a matrix of at least 2 x 2, got shape {values.shape}")
    b, h = values.shape
    if not 1 <= k <= b:
        raise ValueError(f"seasonality k={k} out of range 1..{b}")
    row_band = max(0, min(band, b - 1))
    band = max(0, min(band, (k - 1) // 2))

    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return PatternFeatures(0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                               diagonal_baseline=0.0, all_zero=True)
    normalized = values / peak
    magnitude = np.abs(normalized)
    total = float(magnitude.sum())

    diagonal, repetition = _diagonal_masks(b, h, k, band)
    diagonal_mass = float(magnitude[diagonal].sum()) / total
    end_diagonal_mass = float(magnitude[repetition].sum()) / total
    last_row_mass = float(magnitude[b - 1 - row_band :].sum()) / total
    sign_homogeneity = abs(float(normalized.sum())) / total

    active = magnitude > activity_eps
    density = float(active.mean())

    positive = float(normalized[normalized > 0].sum())
    negative = abs(float(normalized[normalized < 0].sum()))
    balance = 2.0 * min(positive, negative) / total if total > 0 else 0.0
    bipolarity = balance * _sign_coherence(normalized, active)

    return PatternFeatures(
        diagonal_mass=diagonal_mass,
        end_diagonal_mass=end_diagonal_mass,
        last_row_mass=last_row_mass,
        sign_homogeneity=sign_homogeneity,
        bipolarity=bipolarity,
        density=density,
        diagonal_baseline=float(diagonal.mean()),
    )


def _sign_coherence(normalized: np.ndarray, active: np.ndarray) -> float:
    """Magnitude-weighted agreement of signs between adjacent active cells,
    remapped so salt-and-pepper noise scores ~0 and solid blocks ~1."""
    weight_same = 0.0
    weight_total = 0.0
    for (a, b_), (ma, mb) in (
        ((normalized[:-1, :], normalized[1:, :]), (active[:-1, :], active[1:, :])),
        ((normalized[:, :-1], normalized[:, 1:]), (active[:, :-1], active[:, 1:])),
    ):
        both = ma & mb
        if not both.any():
            continue
        w = np.minimum(np.abs(a), np.abs(b_))[both]
        same = (np.sign(a) == np.sign(b_))[both]
        weight_same += float(w[same].sum())
        weight_total += float(w.sum())
    if weight_total == 0.0:
        return 0.0
    agreement = weight_same / weight_total
    return max(0.0, 2.0 * agreement - 1.0)


def classify(features: PatternFeatures,
             thresholds: PatternThresholds = DEFAULT_THRESHOLDS) -> PatternLabel:
    """Apply the fixed-priority threshold rules to a feature vector."""
    f, th = features, thresholds
    diagonal_selective = (
        f.diagonal_mass >= th.diagonal
        and f.diagonal_baseline > 0
        and f.diagonal_mass >= th.diagonal_selectivity * f.diagonal_baseline
    )
    end_ratio = f.end_diagonal_mass / f.diagonal_mass if f.diagonal_mass > 0 else 0.0
    if f.last_row_mass >= th.last_row:
        label = "last_timestep"
    elif diagonal_selective and end_ratio < th.end_ratio:
        label = "diagonals"
    elif diagonal_selective and f.end_diagonal_mass >= th.end_mass:
        label = "diagonals_end"
    elif f.sign_homogeneity >= th.homogeneity and f.density >= th.density:
        label = "fully_correlated"
    elif f.bipolarity >= th.bipolarity:
        label = "bipolar_regions"
    else:
        label = "other"
    return PatternLabel(label=label, features=features, thresholds_version=th.version)


def classify_matrix(matrix, k: int, band: int = 0,
                    thresholds: PatternThresholds = DEFAULT_THRESHOLDS) -> PatternLabel:
    """Convenience: extract features and classify in one call."""
    return classify(extract_features(matrix, k, band), thresholds)
