"""
Forecast accuracy: MASE, MAE and RMSE, and max/min/mean aggregation.

The MASE here scales the summed absolute forecast error by the summed
absolute first differences of the *whole* actual series (training and
forecast span alike) with the factor ``(n - 1) / q``::

    MASE = (n - 1) / q * sum_{i=n+1..Q} |Z_i - Zhat_i| / sum_{i=2..Q} |Z_i - Z_{i-1}|

``conventional=True`` restricts the denominator to the training span
``i = 2..n``, the usual in-sample naive-forecast scale.
"""

from dataclasses import dataclass
import csv
import io
import json
import math

import numpy as np

from .errors import DomainError, UndefinedMetricError
from .series import ScalarSeries


@dataclass(frozen=True)
class EvaluationWindow:
    """
    ``actuals`` holds all ``Q`` samples; ``predicted`` the ``q = Q - n``
    forecasts for samples ``n+1 .. Q`` (1-based).
    """

    n: int
    q: int
    Q: int
    actuals: ScalarSeries
    predicted: ScalarSeries

    def __post_init__(self):
        if self.q != self.Q - self.n:
            raise DomainError(f"q = {self.q} differs from Q - n = {self.Q - self.n}")
        if self.q < 1 or self.n < 1:
            raise DomainError("need n >= 1 and q >= 1")
        if len(self.actuals) != self.Q or len(self.predicted) != self.q:
            raise DomainError("series lengths do not match n, q and Q")
        span = self.actuals.epochs[self.n:]
        if not np.allclose(self.predicted.epochs, span, rtol=0.0, atol=1e-9):
            raise DomainError("predicted epochs are not aligned with actual samples n+1..Q")

    @classmethod
    def from_arrays(cls, actuals, predicted, n, epochs=None):
        """Build from plain arrays; epochs default to 0, 1, 2, ..."""
        actuals = np.asarray(actuals, dtype=float)
        predicted = np.asarray(predicted, dtype=float)
        big_q = actuals.size
        epochs = np.arange(big_q, dtype=float) if epochs is None else np.asarray(epochs, dtype=float)
        return cls(
            n=int(n),
            q=big_q - int(n),
            Q=big_q,
            actuals=ScalarSeries(epochs, actuals),
            predicted=ScalarSeries(epochs[int(n):], predicted),
        )

    @property
    def errors(self):
        return self.actuals.values[self.n:] - self.predicted.values


@dataclass(frozen=True)
class MetricTriple:
    mase: float
    mae: float
    rmse: float

    def __post_init__(self):
        for name in ("mase", "mae", "rmse"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and non-negative, got {v}")
        if self.rmse < self.mae * (1.0 - 1e-12):
            raise DomainError(f"RMSE {self.rmse} below MAE {self.mae}")

    def as_dict(self):
        return {"mase": self.mase, "mae": self.mae, "rmse": self.rmse}


def mase(w, conventional=False):
    """Mean absolute scaled error; raises UndefinedMetricError on a zero scale."""
    z = w.actuals.values
    diffs = np.abs(np.diff(z[: w.n] if conventional else z))
    scale = math.fsum(diffs)
    if not scale > 0:
        span = "training span" if conventional else "series"
        raise UndefinedMetricError(f"MASE undefined: the actual {span} is constant")
    return (w.n - 1) / w.q * math.fsum(np.abs(w.errors)) / scale


def mae(w):
    return math.fsum(np.abs(w.errors)) / w.q


def rmse(w):
    return math.sqrt(math.fsum(w.errors**2) / w.q)


def evaluate(w, conventional=False):
    return MetricTriple(mase(w, conventional), mae(w), rmse(w))


@dataclass(frozen=True)
class StationMetrics:
    station: str
    model: str
    metrics: MetricTriple
    mode: str = "recursive"


@dataclass(frozen=True)
class AggregateRow:
    model: str
    mode: str
    count: int
    max_mase: float
    min_mase: float
    mean_mase: float
    max_mae: float
    min_mae: float
    mean_mae: float
    max_rmse: float
    min_rmse: float
    mean_rmse: float


AGGREGATE_COLUMNS = ("model", "mode", "count",
                     "max_mase", "min_mase", "mean_mase",
                     "max_mae", "min_mae", "mean_mae",
                     "max_rmse", "min_rmse", "mean_rmse")


@dataclass(frozen=True)
class AggregateReport:
    stations: tuple
    rows: tuple

    def row(self, model, mode="recursive"):
        for r in self.rows:
            if r.model == model and r.mode == mode:
                return r
        raise KeyError((model, mode))

    def to_csv(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for r in self.rows:
            writer.writerow([getattr(r, c) if isinstance(getattr(r, c), (str, int)) else repr(getattr(r, c))
                             for c in AGGREGATE_COLUMNS])
        return out.getvalue()

    def to_json(self):
        return json.dumps({
            "stations": [dict(station=s.station, model=s.model, mode=s.mode, **s.metrics.as_dict())
                         for s in self.stations],
            "aggregate": [{c: getattr(r, c) for c in AGGREGATE_COLUMNS} for r in self.rows],
        }, indent=2)


def _summary(values):
    hi, lo = max(values), min(values)
    # the rounded mean of equal values can land one ulp outside [lo, hi]
    return hi, lo, min(max(math.fsum(values) / len(values), lo), hi)


def aggregate(rows):
    """
    Columnwise max/min/mean of each metric, grouped by model and mode.

    Groups keep their order of first appearance.
    """
    rows = tuple(rows)
    if not rows:
        raise DomainError("cannot aggregate an empty set of station metrics")
    groups = {}
    for r in rows:
        groups.setdefault((r.model, r.mode), []).append(r.metrics)
    out = []
    for (model, mode), triples in groups.items():
        stats = []
        for name in ("mase", "mae", "rmse"):
            stats.extend(_summary([getattr(t, name) for t in triples]))
        out.append(AggregateRow(model, mode, len(triples), *stats))
    return AggregateReport(stations=rows, rows=tuple(out))
