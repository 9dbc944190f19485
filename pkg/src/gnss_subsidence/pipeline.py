"""
End-to-end station pipeline.

Stages run in this order for every station:

1. periodic removal      trend line and harmonics fitted on the training
                         prefix of each ECEF component; the periodic part is
                         subtracted from the whole series
2. ellipsoidal coords    geodetic latitude, longitude, height and the
                         confocal-ellipsoid parameter of the reference position
3. local geodetic        rotation of the position offsets into (north, east, up)
4. deflections           deflection of the vertical from the gravity field
                         (zero without a coefficient file)
5. local astronomical    rotation by the deflection angles
6. model choice          the configured model specs
7. mean subtraction      the forecast channel centred on its training mean
8. prediction            fit once per spec, forecast in each evaluation mode
9. accuracy analysis     MASE / MAE / RMSE against the held-out samples

Configuration is an INI file::

    [pipeline]
    stations = data/BOGO.csv, data/WARN.csv
    gfc = egm.gfc              ; optional
    max_degree = 36
    n_train = 1000             ; default: series length - q
    window = 30
    q = 60
    modes = recursive, rolling_actuals
    models = GP, gp_linear, THETA
    output_dir = out
    seed = 0

    [model:gp_linear]
    kind = GP
    kernel = se+linear

A name in ``models`` without a ``[model:...]`` section is a model kind
with default hyperparameters.
"""

from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
import configparser
import csv
from dataclasses import dataclass, field, fields, replace
import hashlib
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, SubsidenceError
from .evaluate import EvaluationWindow, MetricTriple, StationMetrics, aggregate, evaluate
from .forecast import (
    DEFAULT_SLOPE_FLOOR,
    MODES,
    RECURSIVE,
    ModelKind,
    ModelSpec,
    fit,
    predict_recursive,
    predict_rolling,
)
from .forecast.windows import build_windows
from .geodesy import (
    WGS84,
    ZERO_DEFLECTION,
    ConversionSettings,
    ecef_to_geodetic_array,
    ecef_to_local_geodetic_array,
    ellipsoidal_u,
    local_geodetic_to_astronomical_array,
)
from .geopotential import deflections, potential_w_and_gamma0
from .ingest import parse_gfc, parse_station_csv
from .preprocess import FUNDAMENTAL_PERIODS_DAYS, FrequencyTable, preprocess_series
from .series import DAY, ScalarSeries, center_on_training_mean

logger = logging.getLogger(__name__)

STAGES = (
    "periodic_removal",
    "ellipsoidal_coordinates",
    "local_geodetic",
    "deflections",
    "local_astronomical",
    "model_choice",
    "mean_subtraction",
    "prediction",
    "accuracy_analysis",
)

CHANNELS = {"north": 0, "east": 1, "up": 2}

ORIGINS = ("absolute", "training_mean", "first_epoch")

REPORT_FIELDS = ("station", "model", "n", "w", "q", "mase", "mae", "rmse", "classification", "mode")

ROW_SCHEMA = {
    "type": "object",
    "required": list(REPORT_FIELDS),
    "properties": {
        "station": {"type": "string"},
        "model": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "w": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 1},
        "mase": {"type": "number", "minimum": 0},
        "mae": {"type": "number", "minimum": 0},
        "rmse": {"type": "number", "minimum": 0},
        "classification": {"enum": ["subsidence", "upheave", "indeterminate"]},
        "mode": {"enum": list(MODES)},
    },
}

STATE_SCHEMA = {
    "type": ["object", "null"],
    "required": ["classification", "model", "mode", "mase", "predicted_slope_m_per_yr"],
    "properties": {
        "classification": {"enum": ["subsidence", "upheave", "indeterminate"]},
        "model": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "mase": {"type": "number", "minimum": 0},
        "predicted_slope_m_per_yr": {"type": "number"},
    },
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["station", "state", "provenance", "rows", "errors"],
    "properties": {
        "station": {"type": "string"},
        "state": STATE_SCHEMA,
        "provenance": {"type": "object", "required": ["config_hash", "seed", "periods_days", "window"]},
        "rows": {"type": "array", "items": ROW_SCHEMA},
        "errors": {"type": "array"},
    },
}


class PipelineError(SubsidenceError):
    """A stage failed for one station."""

    def __init__(self, station, stage, cause):
        self.station, self.stage, self.cause = station, stage, cause
        super().__init__(f"station {station}, stage {stage}: {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class ModelEntry:
    label: str
    spec: ModelSpec


def default_models(seed=0):
    return (ModelEntry("GP", ModelSpec(ModelKind.GP, seed=seed)),
            ModelEntry("THETA", ModelSpec(ModelKind.THETA, seed=seed)))


@dataclass(frozen=True)
class PipelineConfig:
    """
    Every choice a run depends on.

    ``n_train=None`` trains on all but the last ``q`` samples of each
    station. ``deflection_height`` selects where the gravity field is
    evaluated: ``footpoint`` (on the reference ellipsoid below the station)
    or ``station`` (at the station's own confocal ellipsoid). ``origin``
    selects what the local-frame rotation is applied to: the absolute ECEF
    vector (``absolute``) or its offset from the training-mean position
    (``training_mean``) or from the first epoch (``first_epoch``). The
    choices differ by a constant per axis, which the mean subtraction
    removes before forecasting.
    """

    stations: tuple = ()
    gfc_path: str = None
    max_degree: int = None
    periods_days: tuple = FUNDAMENTAL_PERIODS_DAYS
    epsilon: float = 1e-12
    max_iterations: int = 20
    channel: str = "up"
    models: tuple = field(default_factory=default_models)
    n_train: int = None
    w: int = 30
    q: int = 60
    modes: tuple = MODES
    output_dir: str = "out"
    seed: int = 0
    conventional_mase: bool = False
    slope_floor: float = DEFAULT_SLOPE_FLOOR
    deflection_height: str = "footpoint"
    origin: str = "absolute"
    nominal_step_days: float = 1.0
    trace: bool = False
    jobs: int = 1

    def validate(self, check_files=True):
        if self.q is None or int(self.q) < 1:
            raise ConfigError(f"q must be a positive integer, got {self.q}")
        if int(self.w) < 1:
            raise ConfigError(f"window must be at least 1, got {self.w}")
        if self.n_train is not None and int(self.n_train) < int(self.w) + 1:
            raise ConfigError(f"n_train = {self.n_train} must exceed the window length {self.w}")
        if self.channel not in CHANNELS:
            raise ConfigError(f"channel must be one of {sorted(CHANNELS)}")
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ConfigError(f"modes must be drawn from {MODES}")
        if not self.models:
            raise ConfigError("at least one model is required")
        labels = [m.label for m in self.models]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate model labels in {labels}")
        if self.deflection_height not in ("footpoint", "station"):
            raise ConfigError("deflection_height must be 'footpoint' or 'station'")
        if self.origin not in ORIGINS:
            raise ConfigError(f"origin must be one of {ORIGINS}")
        if not self.epsilon > 0 or int(self.max_iterations) < 1:
            raise ConfigError("epsilon must be positive and max_iterations at least 1")
        if not self.nominal_step_days > 0:
            raise ConfigError("nominal_step_days must be positive")
        if int(self.jobs) < 1:
            raise ConfigError("jobs must be at least 1")
        if self.max_degree is not None and int(self.max_degree) < 2:
            raise ConfigError("max_degree must be at least 2")
        try:
            FrequencyTable(self.periods_days)
        except SubsidenceError as exc:
            raise ConfigError(f"bad frequency table: {exc}") from None
        if not self.stations:
            raise ConfigError("no station files given")
        if check_files:
            for path in self.stations:
                if path != "-" and not os.path.isfile(path):
                    raise ConfigError(f"station file not found: {path}")
            if self.gfc_path is not None and not os.path.isfile(self.gfc_path):
                raise ConfigError(f"gravity field file not found: {self.gfc_path}")
        return self

    def analysis_settings(self):
        """Everything that affects a station's numbers (not paths, jobs or tracing)."""
        skip = ("stations", "output_dir", "trace", "jobs", "gfc_path", "models")
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip}
        d["models"] = [{"label": m.label, **m.spec.describe()} for m in self.models]
        d["gfc_digest"] = _file_digest(self.gfc_path) if self.gfc_path else None
        d["periods_days"] = list(self.periods_days)
        d["modes"] = list(self.modes)
        return d

    def config_hash(self):
        blob = json.dumps(self.analysis_settings(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


def _file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _split_list(text):
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def load_config(source, base_dir=None, **overrides):
    """
    Read a ``PipelineConfig`` from INI text or a path; keyword overrides win.

    Relative paths in the file are resolved against the file's directory.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    if os.path.isfile(str(source)):
        base_dir = base_dir or os.path.dirname(os.path.abspath(source))
        with open(source, encoding="utf-8") as fh:
            parser.read_file(fh)
    else:
        parser.read_string(str(source))
    base_dir = base_dir or os.getcwd()
    if not parser.has_section("pipeline"):
        raise ConfigError("configuration needs a [pipeline] section")
    sec = dict(parser["pipeline"])

    def path(p):
        return p if p == "-" or os.path.isabs(p) else os.path.join(base_dir, p)

    def num(key, typ):
        if key not in sec:
            return None
        raw = sec.pop(key)
        try:
            value = typ(float(raw)) if typ is int else typ(raw)
        except ValueError:
            raise ConfigError(f"[pipeline] {key}: cannot interpret {raw!r}") from None
        if typ is int and float(raw) != value:
            raise ConfigError(f"[pipeline] {key} must be an integer, got {raw!r}")
        return value

    kw = {}
    if "stations" in sec:
        kw["stations"] = tuple(path(p) for p in _split_list(sec.pop("stations")))
    if "gfc" in sec:
        g = sec.pop("gfc").strip()
        kw["gfc_path"] = path(g) if g else None
    if "output_dir" in sec:
        kw["output_dir"] = path(sec.pop("output_dir"))
    for key, target, typ in (("max_degree", "max_degree", int), ("epsilon", "epsilon", float),
                             ("max_iterations", "max_iterations", int), ("n_train", "n_train", int),
                             ("window", "w", int), ("q", "q", int), ("seed", "seed", int),
                             ("slope_floor", "slope_floor", float),
                             ("nominal_step_days", "nominal_step_days", float), ("jobs", "jobs", int)):
        v = num(key, typ)
        if v is not None:
            kw[target] = v
    if "periods_days" in sec:
        try:
            kw["periods_days"] = tuple(float(p) for p in _split_list(sec.pop("periods_days")))
        except ValueError:
            raise ConfigError("[pipeline] periods_days must be a list of numbers") from None
    for key in ("channel", "deflection_height", "origin"):
        if key in sec:
            kw[key] = sec.pop(key).strip()
    if "modes" in sec:
        kw["modes"] = tuple(_split_list(sec.pop("modes")))
    for key in ("conventional_mase", "trace"):
        if key in sec:
            raw = sec.pop(key).strip().lower()
            if raw not in _BOOL:
                raise ConfigError(f"[pipeline] {key} must be a boolean")
            kw[key] = _BOOL[raw]
    seed = kw.get("seed", 0)
    model_names = _split_list(sec.pop("models")) if "models" in sec else None
    if sec:
        raise ConfigError(f"unknown [pipeline] key(s): {sorted(sec)}")
    known_sections = {s for s in parser.sections() if s.startswith("model:")}
    stray = [s for s in parser.sections() if s != "pipeline" and not s.startswith("model:")]
    if stray:
        raise ConfigError(f"unknown section(s) {stray}; model sections are named [model:LABEL]")
    if model_names is not None:
        kw["models"] = tuple(_model_entry(parser, name, seed) for name in model_names)
        unused = known_sections - {f"model:{n}" for n in model_names}
        if unused:
            logger.warning("model sections not listed in 'models' were ignored: %s", sorted(unused))
    else:
        kw["models"] = default_models(seed)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**kw)


def _model_entry(parser, name, seed):
    section = f"model:{name}"
    if parser.has_section(section):
        params = dict(parser[section])
        kind = params.pop("kind", name)
        spec_seed = params.pop("seed", seed)
        try:
            spec_seed = int(spec_seed)
        except ValueError:
            raise ConfigError(f"[{section}] seed must be an integer") from None
        return ModelEntry(name, ModelSpec(kind, params, spec_seed))
    return ModelEntry(name, ModelSpec(name, {}, seed))


def parse_model_list(text, seed=0):
    """``"GP,THETA"`` into model entries with default hyperparameters."""
    return tuple(ModelEntry(name.upper(), ModelSpec(name, {}, seed)) for name in _split_list(text))


# ------------------------------------------------------------------ stages


@contextmanager
def _stage(station, name, trace):
    if trace:
        logger.info("[%s] enter %s", station, name)
    try:
        yield
    except PipelineError:
        raise
    except (SubsidenceError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise PipelineError(station, name, exc) from exc
    if trace:
        logger.info("[%s] exit %s", station, name)


@dataclass(frozen=True)
class StationTransform:
    """Outputs of the preprocessing stages for one station."""

    station: str
    epochs: np.ndarray
    epoch_years: np.ndarray
    trend_only_xyz: np.ndarray
    reference: np.ndarray
    phi: float
    lam: float
    h: float
    u: float
    deflection: object
    gamma0: float
    local_geodetic: np.ndarray
    local_astronomical: np.ndarray
    harmonic_models: tuple
    n_train: int


def load_gravity_model(cfg):
    if cfg.gfc_path is None:
        return None
    return parse_gfc(cfg.gfc_path, max_degree=cfg.max_degree)


def transform_station(series, cfg, n_train, gravity=None):
    """Stages 1 to 5; returns a ``StationTransform``."""
    sid = series.station_id
    trace = cfg.trace
    freqs = FrequencyTable(cfg.periods_days)
    step = cfg.nominal_step_days * DAY

    with _stage(sid, "periodic_removal", trace):
        cols, models = [], []
        for axis in range(3):
            res = preprocess_series(series.component(axis), freqs, n_train, step)
            cols.append(res.decomposition.trend_only.values)
            models.append(res.model)
        xyz = np.column_stack(cols)

    with _stage(sid, "ellipsoidal_coordinates", trace):
        reference = xyz[:n_train].mean(axis=0)
        conv = ConversionSettings(cfg.epsilon, cfg.max_iterations)
        phi, lam, h, _ = ecef_to_geodetic_array(reference, WGS84, conv)
        phi, lam, h = float(phi[0]), float(lam[0]), float(h[0])
        u = float(np.atleast_1d(ellipsoidal_u(reference, WGS84))[0])
        # every epoch converts as well; a failure here flags corrupt positions
        ecef_to_geodetic_array(xyz, WGS84, conv)

    with _stage(sid, "local_geodetic", trace):
        origin = {"absolute": 0.0, "training_mean": reference, "first_epoch": xyz[0]}[cfg.origin]
        lg = ecef_to_local_geodetic_array(xyz - origin, phi, lam)

    with _stage(sid, "deflections", trace):
        if gravity is None:
            d, gamma0 = ZERO_DEFLECTION, float("nan")
        else:
            u_eval = gravity.ell.b if cfg.deflection_height == "footpoint" else max(u, gravity.ell.b)
            _, ctx = potential_w_and_gamma0(gravity, phi, lam, u_eval)
            d = deflections(gravity, phi, lam, u_eval, ctx).check()
            gamma0 = float(ctx.gamma0)

    with _stage(sid, "local_astronomical", trace):
        la = local_geodetic_to_astronomical_array(lg, d, phi)

    return StationTransform(
        station=sid, epochs=series.epochs, epoch_years=series.epoch_years, trend_only_xyz=xyz,
        reference=reference, phi=phi, lam=lam, h=h, u=u, deflection=d, gamma0=gamma0,
        local_geodetic=lg, local_astronomical=la, harmonic_models=tuple(models), n_train=n_train,
    )


@dataclass
class StationResult:
    station: str
    rows: list
    errors: list
    provenance: dict
    plot: dict = field(repr=False, default_factory=dict)
    actual: np.ndarray = field(repr=False, default=None)
    epoch_years: np.ndarray = field(repr=False, default=None)

    @property
    def state(self):
        return station_state(self.rows)

    def report(self):
        return {"station": self.station, "state": self.state, "provenance": self.provenance,
                "rows": self.rows, "errors": self.errors}


def station_state(rows):
    """
    Station-level motion state: the classification of the most accurate
    multi-step forecast.

    Recursive rows are preferred because a one-step rolling prediction
    follows the observed samples, so its slope over the horizon is the slope
    of the observations rather than a forecast. Among the preferred rows the
    lowest MASE wins, ties going to the earlier row. Returns None when there
    are no rows.
    """
    if not rows:
        return None
    pool = [r for r in rows if r["mode"] == RECURSIVE] or list(rows)
    best = min(pool, key=lambda r: r["mase"])
    return {k: best[k] for k in ("classification", "model", "mode", "mase", "predicted_slope_m_per_yr")}


def _provenance(cfg, tr=None, n_train=None):
    prov = {
        "package_version": __version__,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "model_seeds": {m.label: m.spec.seed for m in cfg.models},
        "periods_days": list(cfg.periods_days),
        "frequencies_per_sidereal_year": FrequencyTable(cfg.periods_days).frequencies.tolist(),
        "window": cfg.w,
        "n_train": n_train,
        "q": cfg.q,
        "channel": cfg.channel,
        "origin": cfg.origin,
        "modes": list(cfg.modes),
        "conventional_mase": cfg.conventional_mase,
        "gravity_field": os.path.basename(cfg.gfc_path) if cfg.gfc_path else None,
        "max_degree": cfg.max_degree,
        "models": [{"label": m.label, **m.spec.describe()} for m in cfg.models],
    }
    if tr is not None:
        prov.update({
            "latitude_rad": tr.phi, "longitude_rad": tr.lam, "height_m": tr.h,
            "xi_rad": tr.deflection.xi, "eta_rad": tr.deflection.eta,
            "gamma0": None if math.isnan(tr.gamma0) else tr.gamma0,
            "unresolved_periods_days": sorted({t.period_days for m in tr.harmonic_models
                                               for t in m.terms if not t.resolved}),
        })
    return prov


def run_station(path, cfg, gravity=None):
    """All nine stages for one station file; errors are collected, not raised."""
    station = os.path.splitext(os.path.basename(path))[0] if path != "-" else "stdin"
    errors = []
    try:
        with _stage(station, "ingest", cfg.trace):
            src = sys.stdin.buffer.read() if path == "-" else path
            series = parse_station_csv(src, station_id=None if path == "-" else station,
                                       nominal_step=cfg.nominal_step_days * DAY)
            station = series.station_id if path == "-" else station
        n_total = len(series)
        n_train = n_total - cfg.q if cfg.n_train is None else int(cfg.n_train)
        if n_train < cfg.w + 1 or n_train + cfg.q > n_total:
            raise PipelineError(station, "ingest", ConfigError(
                f"{n_total} samples cannot hold n_train = {n_train} (> window {cfg.w}) plus q = {cfg.q}"))
        tr = transform_station(series, cfg, n_train, gravity)
    except PipelineError as exc:
        logger.error("%s", exc)
        return StationResult(station, [], [{"stage": exc.stage, "model": None, "error": str(exc)}],
                             _provenance(cfg))

    prov = _provenance(cfg, tr, n_train)
    with _stage(station, "model_choice", cfg.trace):
        entries = list(cfg.models)
    chan = tr.local_astronomical[:, CHANNELS[cfg.channel]]
    big_q = n_train + cfg.q
    series_ch = ScalarSeries(tr.epochs[:big_q], chan[:big_q])
    with _stage(station, "mean_subtraction", cfg.trace):
        centered = center_on_training_mean(series_ch, n_train)
        data = build_windows(centered, cfg.w, n_train, cfg.nominal_step_days * DAY)
    rows, plot = [], {}
    epochs_eval = tr.epochs[n_train:big_q]
    for entry in entries:
        try:
            runs = {}
            with _stage(station, "prediction", cfg.trace):
                model = fit(entry.spec, data)
                for mode in cfg.modes:
                    if mode == RECURSIVE:
                        runs[mode] = predict_recursive(model, centered.values[n_train - cfg.w:n_train], cfg.q,
                                                       epochs_eval, cfg.slope_floor)
                    else:
                        runs[mode] = predict_rolling(model, centered.values, cfg.q, epochs_eval, cfg.slope_floor)
            with _stage(station, "accuracy_analysis", cfg.trace):
                for mode, run in runs.items():
                    window = EvaluationWindow(n=n_train, q=cfg.q, Q=big_q, actuals=series_ch,
                                              predicted=run.predictions)
                    m = evaluate(window, cfg.conventional_mase)
                    rows.append({"station": station, "model": entry.label, "n": n_train, "w": cfg.w,
                                 "q": cfg.q, "mase": m.mase, "mae": m.mae, "rmse": m.rmse,
                                 "classification": run.classification, "mode": mode,
                                 "predicted_slope_m_per_yr": run.slope})
                    plot[f"{entry.label}_{mode}"] = run.predictions.values
        except PipelineError as exc:
            logger.error("%s", exc)
            errors.append({"stage": exc.stage, "model": entry.label, "error": str(exc)})
    return StationResult(station, rows, errors, prov, plot, chan[:big_q], tr.epoch_years[:big_q])


# ----------------------------------------------------------------- output


def _csv_text(rows, columns):
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return out.getvalue()


def _safe_name(name):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def write_station_outputs(result, outdir):
    os.makedirs(outdir, exist_ok=True)
    base = os.path.join(outdir, _safe_name(result.station))
    with open(base + "_report.json", "w", encoding="utf-8") as fh:
        json.dump(result.report(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    cols = list(REPORT_FIELDS) + ["predicted_slope_m_per_yr"]
    with open(base + "_report.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(_csv_text(result.rows, cols))
    if result.actual is not None:
        n_train = result.provenance["n_train"]
        keys = sorted(result.plot)
        out = io.StringIO()
        out.write(",".join(["epoch_year", "actual_m", "is_training"] + [f"{k}_m" for k in keys]) + "\n")
        for i, (t, a) in enumerate(zip(result.epoch_years, result.actual)):
            vals = [repr(float(t)), repr(float(a)), "1" if i < n_train else "0"]
            for k in keys:
                vals.append(repr(float(result.plot[k][i - n_train])) if i >= n_train else "")
            out.write(",".join(vals) + "\n")
        with open(base + "_plot.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(out.getvalue())


def _run_one(args):
    path, cfg = args
    logging.getLogger("gnss_subsidence").setLevel(logging.INFO if cfg.trace else logging.WARNING)
    gravity = load_gravity_model(cfg)
    return run_station(path, cfg, gravity)


@dataclass
class PipelineOutcome:
    results: list
    aggregate: object
    exit_status: int


def run_pipeline(cfg, write=True):
    """
    Run every station, write reports and return a ``PipelineOutcome``.

    Stations run in ``cfg.jobs`` worker processes; outputs are ordered as the
    stations are listed regardless of completion order. ``exit_status`` is 1
    when any station or model failed.
    """
    cfg.validate()
    args = [(p, cfg) for p in cfg.stations]
    if cfg.jobs > 1 and len(args) > 1 and "-" not in cfg.stations:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, args))
    else:
        gravity = load_gravity_model(cfg)
        results = [run_station(p, cfg, gravity) for p in cfg.stations]

    metrics = []
    for res in results:
        for r in res.rows:
            metrics.append(StationMetrics(res.station, r["model"], MetricTriple(r["mase"], r["mae"], r["rmse"]),
                                          r["mode"]))
    agg = aggregate(metrics) if metrics else None
    failed = any(res.errors for res in results)
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        for res in results:
            write_station_outputs(res, cfg.output_dir)
        if agg is not None:
            with open(os.path.join(cfg.output_dir, "aggregate.csv"), "w", encoding="utf-8", newline="") as fh:
                fh.write(agg.to_csv())
        summary = {
            "config_hash": cfg.config_hash(),
            "stations": [res.station for res in results],
            "states": {res.station: res.state for res in results},
            "failed_stations": [res.station for res in results if res.errors],
            "errors": [dict(e, station=res.station) for res in results for e in res.errors],
            "aggregate": json.loads(agg.to_json())["aggregate"] if agg is not None else [],
        }
        with open(os.path.join(cfg.output_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return PipelineOutcome(results, agg, 1 if failed else 0)


def with_overrides(cfg, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
