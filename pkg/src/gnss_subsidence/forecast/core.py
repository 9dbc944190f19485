"""
Fitting, multi-step prediction and motion classification.

All models work on mean-centred values; ``ForecastRun.predictions`` are
returned in absolute metres (the training mean added back).
"""

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from ..errors import DomainError
from ..series import ScalarSeries, center_on_training_mean, sidereal_to_julian
from .gp import GaussianProcess
from .neighbors import GeneralRegression, NearestNeighbors
from .neural import BayesianNetwork, Perceptron
from .rbf import RadialBasisNetwork
from .spec import ModelKind, ModelSpec
from .svr import SupportVectorRegression
from .theta import ThetaMethod
from .tree import RegressionTree
from .windows import build_windows

RECURSIVE = "recursive"
ROLLING_ACTUALS = "rolling_actuals"
MODES = (RECURSIVE, ROLLING_ACTUALS)

SUBSIDENCE = "subsidence"
UPHEAVE = "upheave"
INDETERMINATE = "indeterminate"

#: slopes smaller than this (m per year) are not classified
DEFAULT_SLOPE_FLOOR = 5e-4

_ENGINES = {
    ModelKind.GP: GaussianProcess,
    ModelKind.KNN: NearestNeighbors,
    ModelKind.GRNN: GeneralRegression,
    ModelKind.RBF: RadialBasisNetwork,
    ModelKind.CART: RegressionTree,
    ModelKind.MLP: Perceptron,
    ModelKind.BNN: BayesianNetwork,
    ModelKind.SVR: SupportVectorRegression,
}


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A trained model; immutable after ``fit`` and safe to share between threads."""

    spec: ModelSpec
    engine: object = field(repr=False)
    diagnostics: dict = field(repr=False)
    window_length: int
    offset: float = 0.0
    last_epoch: float = 0.0
    step: float = 0.0
    n_train: int = 0

    @property
    def kind(self):
        return self.spec.kind

    def predict_centered(self, windows):
        """One-step predictions (centred metres) for each row of ``windows``."""
        if self.kind is ModelKind.THETA:
            raise DomainError("Theta forecasts from its training prefix, not from windows")
        windows = np.atleast_2d(np.asarray(windows, dtype=float))
        if windows.shape[1] != self.window_length:
            raise DomainError(f"windows must have length {self.window_length}, got {windows.shape[1]}")
        return np.asarray(self.engine.predict(windows), dtype=float)


def fit(spec, data):
    """
    Train ``spec`` on a windowed dataset.

    Theta ignores the windows and uses ``data.train_values``.
    """
    params = spec.resolved()
    rng = np.random.default_rng(spec.seed)
    if spec.kind is ModelKind.THETA:
        engine = ThetaMethod().fit_series(data.train_values, params)
    else:
        if len(data) == 0:
            raise DomainError("the windowed dataset has no usable pairs")
        engine = _ENGINES[spec.kind]().fit(data.inputs, data.targets, params, rng)
    diag = dict(engine.diagnostics, pairs=len(data), skipped_pairs=data.skipped)
    return FittedModel(
        spec=spec,
        engine=engine,
        diagnostics=MappingProxyType(diag),
        window_length=data.window_length,
        offset=data.offset,
        last_epoch=data.last_epoch,
        step=data.step,
        n_train=data.n_train,
    )


@dataclass(frozen=True)
class ForecastRun:
    q: int
    mode: str
    predictions: ScalarSeries
    classification: str
    slope: float
    kind: ModelKind = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if len(self.predictions) != self.q:
            raise DomainError("prediction count differs from the horizon")


def trend_slope(values, epochs):
    """Least-squares slope of ``values`` against ``epochs`` converted to Julian years."""
    t = sidereal_to_julian(epochs)
    t = t - t.mean()
    v = np.asarray(values, dtype=float)
    return float(t @ (v - v.mean()) / (t @ t))


def classify_slope(slope, floor=DEFAULT_SLOPE_FLOOR):
    if abs(slope) < floor:
        return INDETERMINATE
    return SUBSIDENCE if slope < 0 else UPHEAVE


def classify_motion(run, floor=DEFAULT_SLOPE_FLOOR):
    """Subsidence for a negative predicted trend, upheave for a positive one."""
    if run.q < 2:
        raise DomainError("classification needs at least two predictions")
    return classify_slope(trend_slope(run.predictions.values, run.predictions.epochs), floor)


def _make_run(model, centered, epochs, mode, floor):
    values = np.asarray(centered, dtype=float) + model.offset
    preds = ScalarSeries(epochs, values)
    q = len(preds)
    if q >= 2:
        slope = trend_slope(values, epochs)
        label = classify_slope(slope, floor)
    else:
        slope, label = float("nan"), INDETERMINATE
    return ForecastRun(q=q, mode=mode, predictions=preds, classification=label, slope=slope, kind=model.kind)


def _default_epochs(model, q):
    return model.last_epoch + model.step * np.arange(1, q + 1)


def predict_recursive(model, seed_window, q, epochs=None, floor=DEFAULT_SLOPE_FLOOR):
    """
    Recursive multi-step forecast.

    Each prediction is appended to the window and the oldest value dropped.
    ``seed_window`` holds the last ``w`` centred training values; Theta
    ignores it and extrapolates from its training prefix.
    """
    q = int(q)
    if q < 1:
        raise DomainError("the horizon q must be at least 1")
    epochs = _default_epochs(model, q) if epochs is None else np.asarray(epochs, dtype=float)[:q]
    if model.kind is ModelKind.THETA:
        return _make_run(model, model.engine.forecast(q), epochs, RECURSIVE, floor)
    window = np.array(seed_window, dtype=float).ravel()
    if window.size != model.window_length:
        raise DomainError(f"seed window must have length {model.window_length}")
    out = np.empty(q)
    for k in range(q):
        out[k] = model.predict_centered(window[None, :])[0]
        window = np.concatenate([window[1:], out[k:k + 1]])
    return _make_run(model, out, epochs, RECURSIVE, floor)


def predict_rolling(model, centered_values, q, epochs=None, floor=DEFAULT_SLOPE_FLOOR):
    """
    One-step-ahead forecasts over the held-out span using true values.

    ``centered_values`` is the full centred series; the prediction for sample
    ``i`` uses actual samples ``i - w .. i - 1``. Theta is refitted on
    all actual values before each step.
    """
    q = int(q)
    n = model.n_train
    values = np.asarray(centered_values, dtype=float)
    if q < 1:
        raise DomainError("the horizon q must be at least 1")
    if values.size < n + q:
        raise DomainError(f"rolling forecasts need {n + q} actual values, got {values.size}")
    epochs = _default_epochs(model, q) if epochs is None else np.asarray(epochs, dtype=float)[:q]
    if model.kind is ModelKind.THETA:
        params = model.spec.resolved()
        out = np.array([ThetaMethod().fit_series(values[:i], params).forecast(1)[0] for i in range(n, n + q)])
    else:
        w = model.window_length
        windows = np.stack([values[i - w:i] for i in range(n, n + q)])
        out = model.predict_centered(windows)
    return _make_run(model, out, epochs, ROLLING_ACTUALS, floor)


def forecast_series(spec, series, n_train, q, w=30, mode=RECURSIVE, nominal_step=None,
                    floor=DEFAULT_SLOPE_FLOOR):
    """
    Centre on the training mean, window, fit and forecast ``q`` samples.

    Returns ``(run, fitted_model)``. Prediction epochs are the series
    epochs after the training prefix where they exist, extrapolated with
    the sampling step beyond the end of the series.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    centered = center_on_training_mean(series, n_train)
    data = build_windows(centered, w, n_train, nominal_step)
    model = fit(spec, data)
    have = series.epochs[n_train:n_train + q]
    if have.size < q:
        last = series.epochs[-1] if have.size else model.last_epoch
        extra = last + model.step * np.arange(1, q - have.size + 1)
        epochs = np.concatenate([have, extra])
    else:
        epochs = have
    if mode == RECURSIVE:
        run = predict_recursive(model, centered.values[n_train - w:n_train], q, epochs, floor)
    else:
        run = predict_rolling(model, centered.values, q, epochs, floor)
    return run, model
