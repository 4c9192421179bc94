"""EPA daily outdoor air-quality CSV ingestion and station averaging."""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple

import numpy as np


class Pollutant(str, Enum):
    PM25 = "PM25"
    O3 = "O3"

    @classmethod
    def parse(cls, value: "str | Pollutant") -> "Pollutant":
        if isinstance(value, Pollutant):
            return value
        key = str(value).strip().upper().replace(".", "").replace("_", "")
        aliases = {"PM25": cls.PM25, "PM2": cls.PM25, "O3": cls.O3, "OZONE": cls.O3}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown pollutant {value!r}; expected PM25 or O3") from None


class IngestError(ValueError):
    pass


# Column names used by EPA AirData "Download Daily Data" exports.
DEFAULT_COLUMNS = {
    Pollutant.PM25: {
        "date": "Date",
        "station": "Site ID",
        "concentration": "Daily Mean PM2.5 Concentration",
        "aqi": "Daily AQI Value",
    },
    Pollutant.O3: {
        "date": "Date",
        "station": "Site ID",
        "concentration": "Daily Max 8-hour Ozone Concentration",
        "aqi": "Daily AQI Value",
    },
}

_DATE_FORMATS = {
    "mdy": ("%m/%d/%Y", "%m/%d/%y"),
    "dmy": ("%d-%m-%Y", "%d-%m-%y", "%d/%m/%Y", "%d/%m/%y"),
    "iso": ("%Y-%m-%d",),
}


def parse_date(text: str, date_format: str | None = None) -> date:
    """Parse one date cell.

    ``date_format`` is ``"mdy"`` (EPA's ``01/31/2022``), ``"dmy"``
    (``31-01-22``), ``"iso"``, or ``None`` to infer from the separator:
    ``/`` means month-first, ``-`` with a four-digit lead means ISO, any
    other ``-`` form means day-first.
    """
    text = text.strip()
    if date_format is None:
        if "/" in text:
            date_format = "mdy"
        elif len(text.split("-")[0]) == 4:
            date_format = "iso"
        else:
            date_format = "dmy"
    try:
        patterns = _DATE_FORMATS[date_format]
    except KeyError:
        raise ValueError(f"unknown date format {date_format!r}") from None
    for pattern in patterns:
        try:
            return datetime.strptime(text, pattern).date()
        except ValueError:
            continue
    raise ValueError(f"unparseable date {text!r} for format {date_format}")


@dataclass(frozen=True)
class RawObservation:
    date: date
    station_id: str
    concentration: float
    aqi: float


class ParseResult(NamedTuple):
    observations: list[RawObservation]
    dropped: int


def _to_float(cell: str | None) -> float | None:
    if cell is None:
        return None
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def parse_epa_daily_csv(
    source: IO[bytes] | IO[str] | bytes | str | Path,
    pollutant: Pollutant | str,
    column_map: Mapping[str, str] | None = None,
    date_format: str | None = None,
) -> ParseResult:
    """Read one EPA daily export into observations.

    ``source`` is a path, raw bytes, or an open binary/text stream. Rows
    with an unparseable date, a missing or non-numeric concentration or AQI,
    a negative concentration, or an AQI outside [0, 500] are dropped and
    counted in ``ParseResult.dropped``.
    """
    pollutant = Pollutant.parse(pollutant)
    cols = dict(DEFAULT_COLUMNS[pollutant])
    if column_map:
        cols.update(column_map)

    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
    text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise IngestError("empty dataset: no header row")
    header = [h.strip() for h in header]
    index = {}
    for role in ("date", "station", "concentration", "aqi"):
        name = cols[role]
        if name not in header:
            raise IngestError(f"missing column {name!r} (role {role!r}) in header")
        index[role] = header.index(name)

    observations: list[RawObservation] = []
    dropped = 0
    n_rows = 0
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        n_rows += 1
        if len(row) < len(header):
            dropped += 1
            continue
        try:
            day = parse_date(row[index["date"]], date_format)
        except ValueError:
            dropped += 1
            continue
        conc = _to_float(row[index["concentration"]])
        aqi = _to_float(row[index["aqi"]])
        if conc is None or aqi is None or conc < 0 or not 0 <= aqi <= 500:
            dropped += 1
            continue
        observations.append(RawObservation(day, row[index["station"]].strip(), conc, aqi))
    if n_rows == 0:
        raise IngestError("empty dataset: file has a header but no data rows")
    return ParseResult(observations, dropped)


@dataclass(frozen=True, eq=False)
class DailySeries:
    pollutant: Pollutant
    dates: np.ndarray  # datetime64[D]
    concentration: np.ndarray
    aqi: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        conc = np.asarray(self.concentration, dtype=np.float64)
        aqi = np.asarray(self.aqi, dtype=np.float64)
        if not (dates.shape == conc.shape == aqi.shape) or dates.ndim != 1:
            raise ValueError("dates, concentration and aqi must be 1-D and equal length")
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("series dates must be strictly increasing")
        if not (np.all(np.isfinite(conc)) and np.all(np.isfinite(aqi))):
            raise ValueError("series contains missing values")
        for arr in (dates, conc, aqi):
            arr.setflags(write=False)
        object.__setattr__(self, "pollutant", Pollutant.parse(self.pollutant))
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "concentration", conc)
        object.__setattr__(self, "aqi", aqi)

    def __len__(self) -> int:
        return int(self.dates.size)

    @classmethod
    def empty(cls, pollutant: Pollutant) -> "DailySeries":
        return cls(pollutant, np.array([], dtype="datetime64[D]"), np.array([]), np.array([]))


def aggregate_daily_mean(
    observations: Iterable[RawObservation], pollutant: Pollutant | str
) -> DailySeries:
    """Average observations into one row per date.

    Repeated (date, station) records are averaged first, so a station with
    several monitors (POCs) carries one vote on that day.
    """
    pollutant = Pollutant.parse(pollutant)
    by_date: dict[date, OrderedDict[str, list[tuple[float, float]]]] = {}
    for obs in observations:
        by_date.setdefault(obs.date, OrderedDict()).setdefault(obs.station_id, []).append(
            (obs.concentration, obs.aqi)
        )
    if not by_date:
        return DailySeries.empty(pollutant)

    days = sorted(by_date)
    conc = np.empty(len(days))
    aqi = np.empty(len(days))
    for k, day in enumerate(days):
        station_c, station_a = [], []
        for records in by_date[day].values():
            if len(records) == 1:
                station_c.append(records[0][0])
                station_a.append(records[0][1])
            else:
                station_c.append(sum(r[0] for r in records) / len(records))
                station_a.append(sum(r[1] for r in records) / len(records))
        conc[k] = sum(station_c) / len(station_c)
        aqi[k] = sum(station_a) / len(station_a)
    return DailySeries(pollutant, np.array(days, dtype="datetime64[D]"), conc, aqi)


def merge_years(series: list[DailySeries]) -> DailySeries:
    if not series:
        raise ValueError("nothing to merge")
    pollutant = series[0].pollutant
    if any(s.pollutant != pollutant for s in series):
        raise ValueError("cannot merge series of different pollutants")
    dates = np.concatenate([s.dates for s in series])
    uniq, counts = np.unique(dates, return_counts=True)
    if np.any(counts > 1):
        clash = ", ".join(str(d) for d in uniq[counts > 1][:20])
        raise ValueError(f"overlapping dates across inputs: {clash}")
    order = np.argsort(dates, kind="stable")
    conc = np.concatenate([s.concentration for s in series])[order]
    aqi = np.concatenate([s.aqi for s in series])[order]
    return DailySeries(pollutant, dates[order], conc, aqi)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    aqi_min: float
    aqi_max: float
    aqi_mean: float
    aqi_std: float
    conc_min: float
    conc_max: float
    conc_mean: float
    conc_std: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def series_summary(series: DailySeries) -> SummaryStats:
    """Count, range, mean and population standard deviation of both columns."""
    if len(series) == 0:
        raise ValueError("summary of an empty series")
    a, c = series.aqi, series.concentration
    return SummaryStats(
        n=len(series),
        aqi_min=float(a.min()),
        aqi_max=float(a.max()),
        aqi_mean=float(a.mean()),
        aqi_std=float(a.std()),
        conc_min=float(c.min()),
        conc_max=float(c.max()),
        conc_mean=float(c.mean()),
        conc_std=float(c.std()),
    )


SERIES_HEADER = ("DATE", "DAILY_MEAN", "DAILY_AQI")


def write_series(series: DailySeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_HEADER)
        for d, c, a in zip(series.dates, series.concentration, series.aqi):
            writer.writerow((str(d), repr(float(c)), repr(float(a))))


def read_series(path: str | Path, pollutant: Pollutant | str) -> DailySeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SERIES_HEADER:
            raise IngestError(f"{path}: expected header {','.join(SERIES_HEADER)}")
        rows = [r for r in reader if r]
    dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
    conc = np.array([float(r[1]) for r in rows])
    aqi = np.array([float(r[2]) for r in rows])
    return DailySeries(pollutant, dates, conc, aqi)


def load_years(
    paths: Iterable[str | Path],
    pollutant: Pollutant | str,
    column_map: Mapping[str, str] | None = None,
    date_format: str | None = None,
) -> tuple[DailySeries, int]:
    """Parse, station-average and merge a set of yearly files.

    Returns the merged series and the total number of dropped rows.
    """
    pollutant = Pollutant.parse(pollutant)
    yearly, dropped = [], 0
    for path in paths:
        parsed = parse_epa_daily_csv(Path(path), pollutant, column_map, date_format)
        dropped += parsed.dropped
        yearly.append(aggregate_daily_mean(parsed.observations, pollutant))
    return merge_years(yearly), dropped
