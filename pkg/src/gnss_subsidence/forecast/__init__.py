"""Windowed autoregressive forecasting with eight regression engines and the Theta baseline."""

from .core import (
    DEFAULT_SLOPE_FLOOR,
    INDETERMINATE,
    MODES,
    RECURSIVE,
    ROLLING_ACTUALS,
    SUBSIDENCE,
    UPHEAVE,
    FittedModel,
    ForecastRun,
    classify_motion,
    classify_slope,
    fit,
    forecast_series,
    predict_recursive,
    predict_rolling,
    trend_slope,
)
from .spec import ML_KINDS, ModelKind, ModelSpec, default_hyperparameters, defaults_help
from .theta import ThetaMethod
from .windows import WindowedDataset, build_windows


def theta_forecast(s, n_train, q, alpha_step=0.01, floor=DEFAULT_SLOPE_FLOOR):
    """Theta forecast of ``q`` steps from the first ``n_train`` values of ``s``."""
    run, _ = forecast_series(ModelSpec(ModelKind.THETA, {"alpha_step": alpha_step}), s, n_train, q,
                             w=1, floor=floor)
    return run


__all__ = [
    "DEFAULT_SLOPE_FLOOR", "INDETERMINATE", "MODES", "RECURSIVE", "ROLLING_ACTUALS", "SUBSIDENCE",
    "UPHEAVE", "FittedModel", "ForecastRun", "ML_KINDS", "ModelKind", "ModelSpec", "ThetaMethod",
    "WindowedDataset", "build_windows", "classify_motion", "classify_slope", "default_hyperparameters",
    "defaults_help", "fit", "forecast_series", "predict_recursive", "predict_rolling",
    "theta_forecast", "trend_slope",
]
