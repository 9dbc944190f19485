"""
Readers and writers for station position files and gravity-field coefficients.

Station files are a minimal CSV::

    # station: BOGO
    # frame: IGS14
    # unit: m
    epoch_year,x_m,y_m,z_m
    2015.00136893,3633815.1234,1397453.8810,5035280.6310
    ...

``epoch_year`` is a decimal Julian year. Lines starting with ``#`` are
comments; ``# key: value`` comments before the header carry metadata.

Coefficient files follow the ICGEM ``gfc`` layout. Everything before
``end_of_head`` is header; of it only ``radius``, ``earth_gravity_constant``,
``max_degree`` and ``modelname`` are used.
"""

from dataclasses import dataclass
from importlib import resources
import io
import logging
import os
import re

import numpy as np

from .errors import FormatError, RowError
from .geopotential import DEFAULT_GM, DEFAULT_RADIUS, WGS84_NORMAL, GeopotentialModel
from .series import MIN_STATION_NORM, NOMINAL_STEP, PositionSeries, ScalarSeries, julian_to_sidereal, sidereal_to_julian

logger = logging.getLogger(__name__)

STATION_HEADER = "epoch_year,x_m,y_m,z_m"

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?$")


@dataclass(frozen=True)
class StationFileHeader:
    station_id: str
    frame_label: str = ""
    unit_label: str = "m"


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            return data
    else:
        raise TypeError(f"cannot read from {type(source).__name__}")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"input is not UTF-8: {exc}") from None


def parse_number(token, line_number=None):
    """Parse a decimal token; Fortran ``D`` exponents are accepted."""
    tok = token.strip()
    if not _NUMBER.match(tok):
        raise RowError(line_number, f"not a number: {token!r}")
    return float(tok.replace("D", "E").replace("d", "e"))


def parse_station_header(text, default_station="UNKNOWN"):
    meta = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].partition(":")
        if sep:
            meta[key.strip().lower()] = value.strip()
    station = meta.get("station", default_station)
    unit = meta.get("unit", "m")
    if unit != "m":
        raise FormatError(f"unsupported unit {unit!r}; station files must be in metres")
    return StationFileHeader(station_id=station, frame_label=meta.get("frame", ""), unit_label=unit)


def parse_station_csv(source, station_id=None, nominal_step=NOMINAL_STEP, min_norm=MIN_STATION_NORM):
    """
    Parse a station CSV into a ``PositionSeries`` (rows sorted by epoch).

    Raises
    ------
    FormatError
        wrong header line, unsupported unit or duplicate epoch
    RowError
        a malformed data row; ``line_number`` points at the first one and the
        message lists all of them
    """
    text = _read_text(source)
    if station_id is None and isinstance(source, (str, os.PathLike)):
        station_id = os.path.splitext(os.path.basename(os.fspath(source)))[0]
    header = parse_station_header(text, station_id or "UNKNOWN")

    rows, bad = [], []
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not seen_header:
            if line != STATION_HEADER:
                raise FormatError(f"line {lineno}: expected header {STATION_HEADER!r}, got {line!r}")
            seen_header = True
            continue
        fields = line.split(",")
        if len(fields) != 4:
            bad.append((lineno, f"expected 4 fields, got {len(fields)}"))
            continue
        try:
            rows.append((lineno, *(parse_number(f, lineno) for f in fields)))
        except RowError as exc:
            bad.append((lineno, str(exc).split(": ", 1)[1]))
    if not seen_header:
        raise FormatError(f"missing header line {STATION_HEADER!r}")
    if bad:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in bad[:20])
        more = f" (+{len(bad) - 20} more)" if len(bad) > 20 else ""
        raise RowError(bad[0][0], f"{len(bad)} malformed row(s): {detail}{more}")

    arr = np.array([r[1:] for r in rows], dtype=float).reshape(-1, 4)
    lines = np.array([r[0] for r in rows], dtype=int)
    order = np.argsort(arr[:, 0], kind="stable")
    arr, lines = arr[order], lines[order]
    dup = np.flatnonzero(np.diff(arr[:, 0]) == 0)
    if dup.size:
        i = dup[0]
        raise FormatError(f"duplicate epoch {arr[i, 0]!r} on lines {lines[i]} and {lines[i + 1]}")
    return PositionSeries(
        station_id=header.station_id,
        epochs=julian_to_sidereal(arr[:, 0]),
        xyz=arr[:, 1:],
        nominal_step=nominal_step,
        min_norm=min_norm,
        epoch_years=arr[:, 0],
        frame_label=header.frame_label,
    )


def write_station_csv(series, dest=None):
    """
    Write ``series`` in the canonical station layout.

    Numbers use the shortest representation that round-trips, so parsing the
    output reproduces the series bit for bit. Returns the text when ``dest``
    is None.
    """
    out = io.StringIO()
    out.write(f"# station: {series.station_id}\n")
    if series.frame_label:
        out.write(f"# frame: {series.frame_label}\n")
    out.write("# unit: m\n")
    out.write(STATION_HEADER + "\n")
    for t, (x, y, z) in zip(series.epoch_years, series.xyz):
        out.write(f"{float(t)!r},{float(x)!r},{float(y)!r},{float(z)!r}\n")
    text = out.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# -------------------------------------------------------------------- scalar


def parse_scalar_csv(source, column=None):
    """
    Read one value column of a CSV whose first column is ``epoch_year``.

    ``column`` names the value column; the first one after ``epoch_year`` is
    used when it is None. Returns a ``ScalarSeries`` on sidereal epochs.
    """
    text = _read_text(source)
    names, rows, bad = None, [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if names is None:
            if fields[0] != "epoch_year" or len(fields) < 2:
                raise FormatError(f"line {lineno}: header must start with 'epoch_year' and name a value column")
            names = fields
            if column is None:
                idx = 1
            elif column in names[1:]:
                idx = names.index(column)
            else:
                raise FormatError(f"column {column!r} not found; available: {names[1:]}")
            continue
        if len(fields) != len(names):
            bad.append((lineno, f"expected {len(names)} fields, got {len(fields)}"))
            continue
        try:
            rows.append((parse_number(fields[0], lineno), parse_number(fields[idx], lineno)))
        except RowError as exc:
            bad.append((lineno, str(exc).split(": ", 1)[1]))
    if names is None:
        raise FormatError("missing header line starting with 'epoch_year'")
    if bad:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in bad[:20])
        raise RowError(bad[0][0], f"{len(bad)} malformed row(s): {detail}")
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    if arr.shape[0] > 1 and np.any(np.diff(arr[:, 0]) <= 0):
        raise FormatError("epochs must be strictly increasing")
    return ScalarSeries(julian_to_sidereal(arr[:, 0]), arr[:, 1])


def write_scalar_csv(epochs, columns, dest=None, comments=()):
    """
    Write ``epoch_year`` (from sidereal ``epochs``) and named value columns.

    ``columns`` maps a column name to an array the length of ``epochs``.
    Returns the text.
    """
    years = sidereal_to_julian(np.asarray(epochs, dtype=float))
    out = io.StringIO()
    for c in comments:
        out.write(f"# {c}\n")
    out.write(",".join(["epoch_year", *columns]) + "\n")
    cols = [np.asarray(v, dtype=float) for v in columns.values()]
    for i, t in enumerate(years):
        out.write(",".join([repr(float(t))] + [repr(float(c[i])) for c in cols]) + "\n")
    text = out.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    elif dest is not None:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# ----------------------------------------------------------------------- gfc


@dataclass(frozen=True)
class GfcRecord:
    n: int
    m: int
    c: float
    s: float


def _header_value(tokens, lineno):
    if len(tokens) < 2:
        raise FormatError(f"line {lineno}: header key {tokens[0]!r} without value")
    return parse_number(tokens[1], lineno)


def parse_gfc(source, max_degree=None, normal=WGS84_NORMAL):
    """
    Read an ICGEM ``gfc`` file into a ``GeopotentialModel``.

    Parameters
    ----------
    source : path, bytes or file object
    max_degree : int, optional
        truncation degree; records above it are skipped. Defaults to the
        highest degree found in the file.
    normal : NormalField or None
        normal field attached to the model

    Notes
    -----
    Files without a header (bare ``gfc`` lines) get GM and radius of
    EGM2008. Coefficients absent from the file are zero and listed in
    ``model.missing``.
    """
    text = _read_text(source)
    lines = text.splitlines()
    gm, radius, name, head_max = DEFAULT_GM, DEFAULT_RADIUS, "", None
    start = 0
    if any(line.strip().startswith("end_of_head") for line in lines):
        for i, raw in enumerate(lines):
            tokens = raw.split()
            if not tokens:
                continue
            key = tokens[0].lower()
            if key == "end_of_head":
                start = i + 1
                break
            if key == "earth_gravity_constant":
                gm = _header_value(tokens, i + 1)
            elif key == "radius":
                radius = _header_value(tokens, i + 1)
            elif key == "max_degree":
                head_max = int(_header_value(tokens, i + 1))
            elif key == "modelname" and len(tokens) > 1:
                name = tokens[1]

    records = {}
    skipped_kinds = 0
    for i in range(start, len(lines)):
        tokens = lines[i].split()
        if not tokens:
            continue
        lineno = i + 1
        if tokens[0] != "gfc":
            skipped_kinds += 1
            continue
        if len(tokens) < 5:
            raise RowError(lineno, "gfc record needs at least n m C S")
        try:
            n, m = int(tokens[1]), int(tokens[2])
        except ValueError:
            raise RowError(lineno, f"degree/order not integers: {tokens[1]!r} {tokens[2]!r}") from None
        if n < 0 or m < 0 or m > n:
            raise FormatError(f"line {lineno}: invalid degree/order n={n} m={m}")
        c, s = parse_number(tokens[3], lineno), parse_number(tokens[4], lineno)
        if (n, m) in records:
            raise FormatError(f"line {lineno}: duplicate coefficient n={n} m={m}")
        records[(n, m)] = GfcRecord(n, m, c, s)
    if skipped_kinds:
        logger.warning("ignored %d non-gfc records (time-variable terms are not supported)", skipped_kinds)
    if not records:
        raise FormatError("no gfc records found")

    file_max = max(n for n, _ in records)
    N = file_max if max_degree is None else int(max_degree)
    if head_max is not None and head_max < file_max:
        logger.warning("header max_degree %d below highest record degree %d", head_max, file_max)
    cm = np.zeros((N + 1, N + 1))
    sm = np.zeros((N + 1, N + 1))
    for (n, m), rec in records.items():
        if n <= N:
            cm[n, m] = rec.c
            sm[n, m] = rec.s
    missing = tuple((n, m) for n in range(N + 1) for m in range(n + 1) if (n, m) not in records)
    if missing:
        logger.info("%d coefficient(s) up to degree %d absent from file; set to zero", len(missing), N)
    return GeopotentialModel(cm, sm, gm=gm, ref_radius=radius, normal=normal, name=name, missing=missing)


def write_gfc(model, dest=None):
    """Write ``model`` as a canonical gfc file; returns the text when ``dest`` is None."""
    out = io.StringIO()
    out.write("begin_of_head\n")
    if model.name:
        out.write(f"modelname              {model.name}\n")
    out.write(f"earth_gravity_constant {model.gm!r}\n")
    out.write(f"radius                 {model.ref_radius!r}\n")
    out.write(f"max_degree             {model.max_degree}\n")
    out.write("norm                   fully_normalized\n")
    out.write("key    L    M    C                        S\n")
    out.write("end_of_head\n")
    for n in range(model.max_degree + 1):
        for m in range(n + 1):
            out.write(f"gfc {n:4d} {m:4d} {float(model.c[n, m])!r} {float(model.s[n, m])!r}\n")
    text = out.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


BUNDLED_GFC = "egm2008_low_kaula36.gfc"


def bundled_gfc_path():
    """
    Path of the coefficient file shipped with the package: published
    EGM2008 values to degree 4 and a seeded Kaula-rule field to degree 36.
    """
    return str(resources.files("gnss_subsidence") / "data" / BUNDLED_GFC)
