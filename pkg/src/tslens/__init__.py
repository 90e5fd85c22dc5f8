"""Perturbation-based explanations for black-box time-series forecasters."""

from .engine import (
    AnalysisConfig,
    ChangeRatioMatrix,
    CrossChannelMatrix,
    DegeneratePerturbationError,
    ImportanceVector,
    aggregate_importance,
    change_ratio,
    channel_pair_matrix,
    cross_channel,
    dependency_matrix,
    mean_change_ratio,
    scale_change_ratios,
    summary_matrix,
    timestep_importance,
)
from .forecasters import (
    Forecaster,
    LinearARForecaster,
    NaiveForecaster,
    SeasonalNaiveForecaster,
    fit_linear_ar,
)
from .bridge import BridgedForecaster, BridgeError, ProtocolError, bridge_spawn
from .metrics import MetricReport, e_norm, evaluate_forecaster, mae, mase, mse, owa, smape
from .patterns import PatternFeatures, PatternLabel, classify, classify_matrix, extract_features
from .perturb import (
    PerturbationSpec,
    PerturbedWindow,
    adjust_trend,
    amplitude_weight,
    apply_perturbation,
    distance,
    perturb_index,
    positional_weight,
    scale_mean,
    scale_variance,
)
from .properties import Property, eval_property, parse_property_token, property_set_output_steps
from .series import (
    ScalingStats,
    Series,
    SplitSpec,
    Window,
    load_csv,
    make_windows,
    save_csv,
    split,
    standardize,
    unstandardize,
)

__version__ = "0.1.0"
