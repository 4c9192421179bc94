"""Synthetic EPA-style daily exports for tests, demos and benchmarks.

The generator mimics the Dallas County files in shape only: a few stations,
one row per station per day, integer AQI derived from each station's
concentration through the shipped breakpoint table, and a handful of
missing days.
"""

from __future__ import annotations

import csv
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .ingest import (
    DEFAULT_COLUMNS,
    DailySeries,
    Pollutant,
    RawObservation,
    aggregate_daily_mean,
    parse_date,
)
from .physics import compute_aqi_array, default_table

_LEVELS = {
    # log-space mean, log-space sd, AR(1) coefficient, weekly and annual amplitude
    Pollutant.PM25: (np.log(9.0), 0.45, 0.55, 0.06, 0.10),
    Pollutant.O3: (np.log(0.040), 0.30, 0.65, 0.03, 0.30),
}


def _latent(pollutant: Pollutant, days: int, rng: np.random.Generator) -> np.ndarray:
    mu, sd, ar, weekly, annual = _LEVELS[pollutant]
    z = np.empty(days)
    z[0] = rng.normal(0.0, sd)
    innov = sd * np.sqrt(1.0 - ar * ar)
    for t in range(1, days):
        z[t] = ar * z[t - 1] + rng.normal(0.0, innov)
    t = np.arange(days)
    season = weekly * np.sin(2 * np.pi * t / 7) + annual * np.sin(2 * np.pi * (t - 100) / 365.25)
    return np.exp(mu + z + season)


def station_rows(pollutant: Pollutant | str, start: date, days: int, seed: int = 0,
                 stations: int = 3, missing_days: int = 2) -> list[dict]:
    """Per-station daily records as dictionaries keyed by EPA column names."""
    pollutant = Pollutant.parse(pollutant)
    rng = np.random.default_rng(seed)
    level = _latent(pollutant, days, rng)
    table = default_table(pollutant)
    cols = DEFAULT_COLUMNS[pollutant]
    digits = 1 if pollutant is Pollutant.PM25 else 4
    skip = set(rng.choice(np.arange(1, days - 1), size=missing_days, replace=False).tolist())
    rows = []
    for s in range(stations):
        site = f"48-113-{1000 + 67 * s:04d}"
        noise = rng.normal(0.0, 0.15, size=days)
        conc = np.round(level * np.exp(noise), digits)
        aqi = np.round(compute_aqi_array(conc, table))
        for t in range(days):
            if t in skip:
                continue
            rows.append({
                cols["date"]: (start + timedelta(days=t)).strftime("%m/%d/%Y"),
                "Source": "AQS",
                cols["station"]: site,
                "POC": "1",
                cols["concentration"]: f"{conc[t]:.{digits}f}",
                "Units": "ug/m3 LC" if pollutant is Pollutant.PM25 else "ppm",
                cols["aqi"]: f"{int(aqi[t])}",
                "Local Site Name": f"Synthetic site {s}",
                "County": "Dallas",
            })
    rows.sort(key=lambda r: (r[cols["station"]], r[cols["date"]][-4:], r[cols["date"]]))
    return rows


def write_epa_files(directory: str | Path, pollutant: Pollutant | str,
                    years=(2022, 2023, 2024), seed: int = 0, stations: int = 3) -> list[Path]:
    """Write one EPA-style CSV per calendar year; returns the paths."""
    pollutant = Pollutant.parse(pollutant)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, year in enumerate(years):
        start = date(year, 1, 1)
        days = (date(year + 1, 1, 1) - start).days
        rows = station_rows(pollutant, start, days, seed=seed * 1000 + k, stations=stations)
        path = directory / f"{pollutant.value.lower()}_{year}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        paths.append(path)
    return paths


def synthetic_series(pollutant: Pollutant | str = Pollutant.PM25, days: int = 1096,
                     seed: int = 0) -> DailySeries:
    """A station-averaged daily series without going through CSV files."""
    pollutant = Pollutant.parse(pollutant)
    cols = DEFAULT_COLUMNS[pollutant]
    rows = station_rows(pollutant, date(2022, 1, 1), days, seed=seed)
    obs = [
        RawObservation(parse_date(r[cols["date"]], "mdy"), r[cols["station"]],
                       float(r[cols["concentration"]]), float(r[cols["aqi"]]))
        for r in rows
    ]
    return aggregate_daily_mean(obs, pollutant)
