"""
Command line interface.

Subcommands::

    gen-fixture   synthetic station CSV with a known trend, harmonics and gaps
    preprocess    trend / periodic decomposition of one ECEF component
    transform     local-astronomical (north, east, up) series of a station
    forecast      fit one model to a scalar series and forecast it
    evaluate      MASE / MAE / RMSE of a prediction file against actuals
    run           the full pipeline over one or more stations

Every subcommand takes ``--help``. Exit status is 0 on success, 1 when a
pipeline run had a failing station or model and 2 on bad input.
"""

import argparse
from dataclasses import fields
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .errors import FormatError, SubsidenceError, UndefinedMetricError
from .evaluate import EvaluationWindow, evaluate, mae, rmse
from .fixtures import DEFAULT_HARMONICS, FixtureSpec, make_fixture
from .forecast import MODES, RECURSIVE, ModelKind, ModelSpec, defaults_help, forecast_series
from .ingest import parse_scalar_csv, parse_station_csv, write_scalar_csv, write_station_csv
from .pipeline import (
    CHANNELS,
    ORIGINS,
    PipelineConfig,
    load_config,
    load_gravity_model,
    parse_model_list,
    run_pipeline,
    transform_station,
    with_overrides,
)
from .preprocess import FUNDAMENTAL_PERIODS_DAYS, FrequencyTable, preprocess_series
from .series import DAY

logger = logging.getLogger("gnss_subsidence")

AXES = {"x": 0, "y": 1, "z": 2}


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _read_input(path):
    return sys.stdin.buffer.read() if path == "-" else path


def _write_output(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _station_series(path, station=None):
    src = _read_input(path)
    sid = station or (None if path == "-" else os.path.splitext(os.path.basename(path))[0])
    return parse_station_csv(src, station_id=sid)


def _periods(text):
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated periods in days, got {text!r}") from None


def _pair(kind):
    def parse(text):
        parts = text.split(":")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            vals = None
        if kind == "harmonic" and vals is not None and len(vals) == 3:
            return tuple(vals)
        if kind == "outage" and vals is not None and len(vals) == 2:
            return int(vals[0]), int(vals[1])
        form = "PERIOD:A:B" if kind == "harmonic" else "START:LENGTH"
        raise argparse.ArgumentTypeError(f"expected {form}, got {text!r}")
    return parse


def _params(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise SubsidenceError(f"--param expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _pipeline_defaults():
    d = PipelineConfig()
    skip = ("stations", "models")
    lines = [f"  {f.name} = {getattr(d, f.name)}" for f in fields(d) if f.name not in skip]
    lines.append("  models = " + ", ".join(m.label for m in d.models))
    return "\n".join(lines)


# --------------------------------------------------------------- commands


def cmd_gen_fixture(args):
    harmonics = tuple(args.harmonic) if args.harmonic else DEFAULT_HARMONICS
    spec = FixtureSpec(station_id=args.station, slope=args.slope, start_year=args.start, years=args.years,
                       lat_deg=args.lat, lon_deg=args.lon, height=args.height, harmonics=harmonics,
                       noise=args.noise, gap_fraction=args.gap_fraction, outage=args.outage, seed=args.seed)
    _write_output(write_station_csv(make_fixture(spec).series), args.output)
    return 0


def cmd_preprocess(args):
    series = _station_series(args.station_file)
    s = series.component(AXES[args.component])
    freqs = FrequencyTable(args.periods)
    res = preprocess_series(s, freqs, args.n_train, args.nominal_step_days * DAY)
    _write_output(res.decomposition.to_csv(), args.output)
    return 0


def _config_from_args(args, stations):
    kw = dict(stations=tuple(stations), gfc_path=args.gfc, max_degree=args.max_degree,
              n_train=args.n_train, origin=args.origin, deflection_height=args.deflection_height,
              periods_days=args.periods, trace=args.trace)
    return with_overrides(PipelineConfig(), **kw)


def cmd_transform(args):
    series = _station_series(args.station_file)
    cfg = _config_from_args(args, [args.station_file])
    cfg = with_overrides(cfg, q=1)
    cfg.validate(check_files=False)
    n_train = len(series) if args.n_train is None else args.n_train
    tr = transform_station(series, cfg, n_train, load_gravity_model(cfg))
    comments = [
        f"station: {tr.station}",
        f"latitude_rad: {tr.phi!r}",
        f"longitude_rad: {tr.lam!r}",
        f"height_m: {tr.h!r}",
        f"xi_rad: {tr.deflection.xi!r}",
        f"eta_rad: {tr.deflection.eta!r}",
        f"origin: {cfg.origin}",
    ]
    la = tr.local_astronomical
    text = write_scalar_csv(tr.epochs, {"north_m": la[:, 0], "east_m": la[:, 1], "up_m": la[:, 2]},
                            comments=comments)
    _write_output(text, args.output)
    return 0


def cmd_forecast(args):
    s = parse_scalar_csv(_read_input(args.series_file), args.column)
    spec = ModelSpec(args.model, _params(args.param), args.seed)
    if args.n_train is not None:
        n_train = args.n_train
    else:
        # rolling forecasts need the actuals of the horizon
        n_train = len(s) - args.q if args.mode == "rolling_actuals" else len(s)
    run, model = forecast_series(spec, s, n_train, args.q, args.window, args.mode,
                                 args.nominal_step_days * DAY, args.slope_floor)
    comments = [
        f"model: {spec.kind.value}",
        f"hyperparameters: {json.dumps(spec.resolved(), sort_keys=True)}",
        f"seed: {spec.seed}",
        f"n_train: {n_train}",
        f"window: {args.window}",
        f"mode: {run.mode}",
        f"classification: {run.classification}",
        f"predicted_slope_m_per_yr: {run.slope!r}",
    ]
    _write_output(write_scalar_csv(run.predictions.epochs, {"predicted_m": run.predictions.values},
                                   comments=comments), args.output)
    return 0


def cmd_evaluate(args):
    actual = parse_scalar_csv(_read_input(args.actual), args.column)
    pred_src = _read_input(args.predicted)
    pred_column = args.pred_column
    if pred_column is None and args.column is not None:
        try:
            pred = parse_scalar_csv(pred_src, args.column)
        except FormatError:
            pred = parse_scalar_csv(pred_src, None)
    else:
        pred = parse_scalar_csv(pred_src, pred_column)
    if args.n_train is not None:
        n = args.n_train
    else:
        hit = np.flatnonzero(np.isclose(actual.epochs, pred.epochs[0], rtol=0.0, atol=1e-9)) if len(pred) else []
        if len(hit) == 0:
            raise SubsidenceError("first predicted epoch not found among the actual epochs; pass --n-train")
        n = int(hit[0])
        if n == 0:
            raise SubsidenceError("predictions start at the first actual sample; pass --n-train")
    if len(pred) == len(actual):
        # a prediction file spanning the whole series is cut to the forecast span
        pred = pred.tail(n)
    big_q = n + len(pred)
    if big_q > len(actual):
        raise SubsidenceError(f"{len(pred)} predictions after n = {n} exceed the {len(actual)} actual samples")
    window = EvaluationWindow(n=n, q=len(pred), Q=big_q, actuals=actual.head(big_q), predicted=pred)
    try:
        out = evaluate(window, args.conventional).as_dict()
    except UndefinedMetricError as exc:
        logger.warning("%s", exc)
        out = {"mase": None, "mae": mae(window), "rmse": rmse(window)}
    out.update({"n": n, "q": window.q, "conventional_mase": args.conventional})
    _write_output(json.dumps(out, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def cmd_run(args):
    overrides = dict(gfc_path=args.gfc, max_degree=args.max_degree, n_train=args.n_train, w=args.window,
                     q=args.q, seed=args.seed, output_dir=args.output_dir, jobs=args.jobs,
                     channel=args.channel, origin=args.origin, deflection_height=args.deflection_height,
                     slope_floor=args.slope_floor)
    if args.mode:
        overrides["modes"] = tuple(args.mode)
    if args.trace:
        overrides["trace"] = True
    if args.conventional_mase:
        overrides["conventional_mase"] = True
    if args.station:
        overrides["stations"] = tuple(args.station)
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig()
    cfg = with_overrides(cfg, **overrides)
    if args.models:
        cfg = with_overrides(cfg, models=parse_model_list(args.models, cfg.seed))
    outcome = run_pipeline(cfg)
    for res in outcome.results:
        st = res.state
        if st is None:
            print(f"{res.station}: failed ({len(res.errors)} error(s))")
        else:
            print(f"{res.station}: {st['classification']} (model {st['model']}, {st['mode']}, "
                  f"MASE {st['mase']:.4g}, slope {st['predicted_slope_m_per_yr']:.4g} m/yr)")
    print(f"reports written to {cfg.output_dir}")
    return outcome.exit_status


# ----------------------------------------------------------------- parser


def _add_geometry(p):
    p.add_argument("--gfc", help="gravity field coefficient file (ICGEM gfc); zero deflections without it")
    p.add_argument("--max-degree", type=int, help="truncation degree of the gravity field")
    p.add_argument("--origin", choices=ORIGINS, help="what the local-frame rotation is applied to "
                   f"(default {PipelineConfig.origin})")
    p.add_argument("--deflection-height", choices=("footpoint", "station"),
                   help=f"where deflections are evaluated (default {PipelineConfig.deflection_height})")


def build_parser():
    parser = argparse.ArgumentParser(prog="gnss-subsidence", description=__doc__.split("\n\n")[0].strip(),
                                     formatter_class=_Formatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-fixture", help="write a synthetic station CSV", formatter_class=_Formatter,
                       description="Synthetic station: linear up trend plus harmonics plus white noise, "
                                   "rotated into ECEF, with optional random gaps and an outage.")
    p.add_argument("--station", default=FixtureSpec.station_id, help="station id")
    p.add_argument("--slope", type=float, default=FixtureSpec.slope, help="up trend in m per Julian year")
    p.add_argument("--years", type=float, default=FixtureSpec.years, help="span in Julian years")
    p.add_argument("--start", type=float, default=FixtureSpec.start_year, help="first epoch (decimal year)")
    p.add_argument("--lat", type=float, default=FixtureSpec.lat_deg, help="geodetic latitude in degrees")
    p.add_argument("--lon", type=float, default=FixtureSpec.lon_deg, help="longitude in degrees")
    p.add_argument("--height", type=float, default=FixtureSpec.height, help="ellipsoidal height in m")
    p.add_argument("--harmonic", type=_pair("harmonic"), action="append", metavar="P:A:B",
                   help="period in days with cosine and sine amplitudes in m (repeatable; "
                        f"default {DEFAULT_HARMONICS})")
    p.add_argument("--noise", type=float, default=FixtureSpec.noise, help="white noise sd in m")
    p.add_argument("--gap-fraction", type=float, default=FixtureSpec.gap_fraction,
                   help="fraction of days dropped at random")
    p.add_argument("--outage", type=_pair("outage"), metavar="START:LENGTH",
                   help="contiguous run of days removed")
    p.add_argument("--seed", type=int, default=FixtureSpec.seed, help="random seed")
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=cmd_gen_fixture)

    p = sub.add_parser("preprocess", help="decompose one ECEF component", formatter_class=_Formatter,
                       description="Fit a trend line and harmonics on the training prefix of one component "
                                   "and write epoch_year,y,y_trend,y_periodic,y_trendonly.")
    p.add_argument("station_file", help="station CSV ('-' for stdin)")
    p.add_argument("--component", choices=sorted(AXES), default="z", help="ECEF component")
    p.add_argument("--n-train", type=int, help="training prefix length (default: all samples)")
    p.add_argument("--periods", type=_periods, default=FUNDAMENTAL_PERIODS_DAYS, help="periods in days")
    p.add_argument("--nominal-step-days", type=float, default=1.0, help="sampling step in days")
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("transform", help="local-astronomical series of a station", formatter_class=_Formatter,
                       description="Periodic removal, geodetic conversion, local geodetic rotation and "
                                   "deflection correction; writes epoch_year,north_m,east_m,up_m.")
    p.add_argument("station_file", help="station CSV ('-' for stdin)")
    p.add_argument("--n-train", type=int, help="training prefix length (default: all samples)")
    p.add_argument("--periods", type=_periods, default=FUNDAMENTAL_PERIODS_DAYS, help="periods in days")
    p.add_argument("--trace", action="store_true", help="log entry and exit of every stage")
    _add_geometry(p)
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("forecast", help="fit one model and forecast a scalar series", formatter_class=_Formatter,
                       description="Fit one windowed model (or Theta) to the training prefix of a scalar "
                                   "series and write epoch_year,predicted_m.",
                       epilog="model defaults (override with --param KEY=VALUE):\n" + defaults_help())
    p.add_argument("series_file", help="CSV with epoch_year and a value column ('-' for stdin)")
    p.add_argument("--column", help="value column (default: the first after epoch_year)")
    p.add_argument("--model", default="GP", type=str.upper, choices=[k.value for k in ModelKind],
                   help="model kind")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="hyperparameter override (repeatable)")
    p.add_argument("--seed", type=int, default=0, help="model seed")
    p.add_argument("--n-train", type=int,
                   help="training prefix length (default: all samples, series length - q for rolling_actuals)")
    p.add_argument("--window", type=int, default=PipelineConfig.w, help="input window length")
    p.add_argument("--q", type=int, default=PipelineConfig.q, help="forecast horizon in samples")
    p.add_argument("--mode", choices=MODES, default=RECURSIVE, help="multi-step strategy")
    p.add_argument("--slope-floor", type=float, default=PipelineConfig.slope_floor,
                   help="|slope| in m/yr below which the motion is indeterminate")
    p.add_argument("--nominal-step-days", type=float, default=1.0, help="sampling step in days")
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="accuracy of predictions against actuals", formatter_class=_Formatter,
                       description="MASE, MAE and RMSE as JSON. The actual file holds the whole series; "
                                   "the prediction file either the forecast span or the whole series.")
    p.add_argument("actual", help="actual series CSV")
    p.add_argument("predicted", help="prediction CSV")
    p.add_argument("--column", help="value column of the actual file")
    p.add_argument("--pred-column", help="value column of the prediction file (default: the --column "
                   "name if present, else the first)")
    p.add_argument("--n-train", type=int, help="training count n (default: found from the first predicted epoch)")
    p.add_argument("--conventional", action="store_true", help="scale MASE by the training span only")
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline over stations", formatter_class=_Formatter,
                       description="Run every stage per station and write <station>_report.json/.csv, "
                                   "<station>_plot.csv, aggregate.csv and summary.json.",
                       epilog="pipeline defaults:\n" + _pipeline_defaults()
                              + "\n\nmodel defaults:\n" + defaults_help())
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--station", action="append", help="station CSV, '-' for stdin (repeatable; "
                   "replaces the configured list)")
    p.add_argument("--models", help="comma-separated model kinds with default hyperparameters")
    p.add_argument("--n-train", type=int, help="training count (default: series length - q)")
    p.add_argument("--window", type=int, help="input window length")
    p.add_argument("--q", type=int, help="forecast horizon in samples")
    p.add_argument("--mode", action="append", choices=MODES, help="evaluation mode (repeatable)")
    p.add_argument("--channel", choices=sorted(CHANNELS), help="forecast channel")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--slope-floor", type=float, help="classification floor in m/yr")
    p.add_argument("--conventional-mase", action="store_true", help="scale MASE by the training span only")
    p.add_argument("--output-dir", help="report directory")
    p.add_argument("--jobs", type=int, help="parallel station workers")
    p.add_argument("--trace", action="store_true", help="log entry and exit of every stage")
    _add_geometry(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "trace", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except BrokenPipeError:
        # the reader went away (e.g. ``| head``); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except (SubsidenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
