"""Daily heat flags and weekly heat indicators from gridded temperature extrema.

Grid cells are mapped to municipalities; a municipality's daily maximum and
minimum temperature are the maxima over its member cells.  Weeks are
Monday-anchored 7-day blocks; a week is a summer week when at least four of
its days fall in June-August, which is the same as its Thursday doing so.
The week is then labelled with the ISO week number and the Thursday's month.
"""

from __future__ import annotations

import datetime as dt
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import pandas as pd

from . import _io
from .exceptions import (
    InvalidExtrema,
    MissingCell,
    ParseError,
    UnknownMunicipality,
    UnmappedMunicipality,
    WrongWeekLength,
)
from .panel import HEAT_WAVE_MIN_DAYS, SUMMER_MONTHS

log = logging.getLogger(__name__)

HEAT_DAY_MIN_TMAX = 30.0  # inclusive
TROPICAL_NIGHT_TMIN = 20.0  # strict

INDICATOR_COLUMNS = [
    "municipality_id", "year", "month_of_year", "week_index",
    "heat_days", "heat_wave", "tropical_nights",
]


class DayFlags(NamedTuple):
    is_heat_day: bool
    is_tropical_night: bool


@dataclass(frozen=True)
class TemperatureGridDay:
    date: dt.date
    cells: Mapping  # cell_id -> (t_max, t_min)

    def __post_init__(self):
        for cell, (t_max, t_min) in self.cells.items():
            if t_min > t_max:
                raise InvalidExtrema(f"cell {cell!r} on {self.date}: t_min {t_min} > t_max {t_max}")


@dataclass(frozen=True)
class WeeklyHeatIndicators:
    municipality_id: str | None
    year: int | None
    week_index: int | None
    heat_days: int
    heat_wave: int
    tropical_nights: int


def classify_day(t_max: float, t_min: float) -> DayFlags:
    if t_min > t_max:
        raise InvalidExtrema(f"t_min {t_min} exceeds t_max {t_max}")
    return DayFlags(bool(t_max >= HEAT_DAY_MIN_TMAX), bool(t_min > TROPICAL_NIGHT_TMIN))


def municipality_daily_extrema(grid_day: TemperatureGridDay, cell_map: Mapping, municipality_id) -> tuple[float, float]:
    """Maximum ``t_max`` and maximum ``t_min`` over the municipality's cells."""
    if municipality_id not in cell_map:
        raise UnknownMunicipality(municipality_id)
    cells = cell_map[municipality_id]
    if not cells:
        raise UnmappedMunicipality(f"municipality {municipality_id!r} has no grid cells")
    t_max = t_min = -np.inf
    for cell in cells:
        try:
            hi, lo = grid_day.cells[cell]
        except KeyError:
            raise MissingCell(cell) from None
        t_max = max(t_max, hi)
        t_min = max(t_min, lo)
    return float(t_max), float(t_min)


def weekly_indicators(daily_flags: Sequence, municipality_id=None, year=None, week_index=None) -> WeeklyHeatIndicators:
    flags = list(daily_flags)
    if len(flags) != 7:
        raise WrongWeekLength(f"expected 7 daily entries, got {len(flags)}")
    heat = sum(1 for f in flags if f[0])
    tropical = sum(1 for f in flags if f[1])
    return WeeklyHeatIndicators(municipality_id, year, week_index, heat,
                                int(heat >= HEAT_WAVE_MIN_DAYS), tropical)


def summer_week(date: dt.date):
    """``(year, week_index, month_of_year)`` for the Monday-anchored week holding ``date``,
    or ``None`` when fewer than four of that week's days fall in June-August."""
    thursday = date + dt.timedelta(days=3 - date.weekday())
    if thursday.month not in SUMMER_MONTHS:
        return None
    iso = thursday.isocalendar()
    return iso[0], iso[1], thursday.month


def summer_dates(year: int) -> list[dt.date]:
    """Every date belonging to a summer week of ``year`` (full weeks, Monday first)."""
    start = dt.date(year, 6, 1)
    start -= dt.timedelta(days=start.weekday())
    out = []
    day = start
    while day <= dt.date(year, 9, 7):
        if summer_week(day) is not None:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


# ---------------------------------------------------------------------------
# file-level pipeline

def load_grid_days(path) -> pd.DataFrame:
    raw = _io.read_raw_csv(path)
    frame = _io.parse_columns(
        raw, {"cell_id": _io.STR, "date": _io.STR, "t_max_c": _io.FLOAT, "t_min_c": _io.FLOAT}, source=str(path)
    )
    dates = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    if dates.isna().any():
        i = int(np.flatnonzero(dates.isna().to_numpy())[0])
        raise ParseError(i + 2, "date", [(i + 2, "date", raw["date"].iloc[i])])
    frame["date"] = dates.dt.date
    return frame


def load_cell_map(path) -> pd.DataFrame:
    """Municipality-to-cell membership.  An optional ``weight`` column allows
    area-weighted membership lists; rows with weight <= 0 are not members."""
    raw = _io.read_raw_csv(path)
    kinds = {"municipality_id": _io.STR, "cell_id": _io.STR}
    if "weight" in raw.columns:
        kinds["weight"] = _io.FLOAT
    frame = _io.parse_columns(raw, kinds, optional=("cell_id",), source=str(path))
    if "weight" in frame.columns:
        frame = frame[frame["weight"] > 0].drop(columns="weight")
    return frame.reset_index(drop=True)


def cell_map_dict(cell_map: pd.DataFrame) -> dict:
    out = {}
    for muni, cell in zip(cell_map["municipality_id"], cell_map["cell_id"]):
        cells = out.setdefault(muni, set())
        if cell:
            cells.add(cell)
    return out


def compute_weekly_indicators(grid_days: pd.DataFrame, cell_map: pd.DataFrame, municipalities=None) -> pd.DataFrame:
    """Weekly heat indicators for every municipality and summer week.

    Parameters
    ----------
    grid_days : DataFrame
        Columns ``cell_id, date, t_max_c, t_min_c``.
    cell_map : DataFrame
        Columns ``municipality_id, cell_id``.
    municipalities : iterable of str, optional
        Municipalities that must be covered by ``cell_map``.

    Returns
    -------
    DataFrame sorted by ``(municipality_id, year, week_index)``.  Weeks with
    a missing municipality-day are dropped with a logged warning.
    """
    members = cell_map_dict(cell_map)
    required = set(members) if municipalities is None else set(municipalities)
    unmapped = sorted(m for m in required if not members.get(m))
    if unmapped:
        raise UnmappedMunicipality(f"no cell-map entry for municipality {', '.join(unmapped)}")

    bad = grid_days["t_min_c"] > grid_days["t_max_c"]
    if bad.any():
        row = grid_days[bad].iloc[0]
        raise InvalidExtrema(f"cell {row['cell_id']!r} on {row['date']}: t_min {row['t_min_c']} > t_max {row['t_max_c']}")

    known_cells = set(grid_days["cell_id"])
    pairs = pd.DataFrame(
        [(m, c) for m in sorted(required) for c in sorted(members[m])], columns=["municipality_id", "cell_id"]
    )
    absent = sorted(set(pairs["cell_id"]) - known_cells)
    if absent:
        raise MissingCell(absent[0])

    merged = pairs.merge(grid_days, on="cell_id", how="inner")
    daily = merged.groupby(["municipality_id", "date"], sort=True).agg(
        t_max=("t_max_c", "max"), t_min=("t_min_c", "max"), n_cells=("cell_id", "nunique")
    ).reset_index()
    n_members = pairs.groupby("municipality_id")["cell_id"].size()
    daily["complete"] = daily["n_cells"].to_numpy() == n_members.reindex(daily["municipality_id"]).to_numpy()

    weeks = [summer_week(d) for d in daily["date"]]
    keep = np.array([w is not None for w in weeks], dtype=bool)
    daily = daily[keep].copy()
    weeks = [w for w in weeks if w is not None]
    if daily.empty:
        return pd.DataFrame(columns=INDICATOR_COLUMNS)
    daily["year"] = [w[0] for w in weeks]
    daily["week_index"] = [w[1] for w in weeks]
    daily["month_of_year"] = [w[2] for w in weeks]
    daily["heat"] = daily["t_max"] >= HEAT_DAY_MIN_TMAX
    daily["tropical"] = daily["t_min"] > TROPICAL_NIGHT_TMIN

    weekly = daily.groupby(["municipality_id", "year", "week_index"], sort=True).agg(
        month_of_year=("month_of_year", "first"),
        n_days=("date", "nunique"),
        complete=("complete", "all"),
        heat_days=("heat", "sum"),
        tropical_nights=("tropical", "sum"),
    ).reset_index()
    full = (weekly["n_days"] == 7) & weekly["complete"]
    if not full.all():
        for _, row in weekly[~full].iterrows():
            log.warning("dropping week %s/%s of municipality %s: missing municipality-day",
                        row["year"], row["week_index"], row["municipality_id"])
        weekly = weekly[full]
    weekly = weekly.astype({"heat_days": np.int64, "tropical_nights": np.int64})
    weekly["heat_wave"] = (weekly["heat_days"] >= HEAT_WAVE_MIN_DAYS).astype(np.int64)
    return weekly[INDICATOR_COLUMNS].reset_index(drop=True)


def load_indicators(path) -> pd.DataFrame:
    raw = _io.read_raw_csv(path)
    kinds = {"municipality_id": _io.STR, "year": _io.INT, "month_of_year": _io.INT, "week_index": _io.INT,
             "heat_days": _io.FLOAT, "heat_wave": _io.INT, "tropical_nights": _io.FLOAT}
    return _io.parse_columns(raw, kinds, source=str(path))
