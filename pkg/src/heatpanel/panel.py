"""Canonical district-week panel: loading, validation and CSV round-tripping.

A :class:`PanelDataset` wraps one row per district and summer week.  The
column layout is fixed (see :data:`PANEL_COLUMNS`); loaders accept a column
name map so differently labelled extracts can be read without renaming.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import _io
from .exceptions import DuplicateKey, ParseError

KEY_COLUMNS = ("district_id", "year", "week_index")
SUMMER_MONTHS = (6, 7, 8)
HEAT_WAVE_MIN_DAYS = 3

# column -> kind; the order is the canonical CSV order
PANEL_COLUMNS = {
    "district_id": _io.STR,
    "year": _io.INT,
    "month_of_year": _io.INT,
    "week_index": _io.INT,
    "deaths_per_1k": _io.FLOAT,
    "heat_days": _io.FLOAT,
    "heat_wave": _io.INT,
    "tropical_nights": _io.FLOAT,
    "elderly_share": _io.FLOAT,
    "greenness_z": _io.FLOAT,
    "income_10k": _io.FLOAT,
    "hospital_distance_km": _io.FLOAT,
    "altitude_km": _io.FLOAT,
}
COVARIATE_COLUMNS = ("elderly_share", "greenness_z", "income_10k", "hospital_distance_km", "altitude_km")

MUNICIPALITY_COLUMNS = {
    "municipality_id": _io.STR,
    "district_id": _io.STR,
    "population": _io.INT,
    "elderly_share": _io.FLOAT,
    "mean_income_10k": _io.FLOAT,
    "hospital_distance_km": _io.FLOAT,
    "mean_altitude_km": _io.FLOAT,
}
# optional: lets populations and shares vary by year
MUNICIPALITY_OPTIONAL = ("year", "elderly_share", "mean_income_10k", "hospital_distance_km", "mean_altitude_km")


@dataclass(frozen=True)
class Violation:
    key: tuple
    field: str
    message: str

    def __str__(self):
        return f"{self.key} {self.field}: {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, key, column, message):
        self.violations.append(Violation(tuple(key), column, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def fields(self) -> set:
        return {v.field for v in self.violations}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(str(v.key), v.field, v.message) for v in self.violations],
            columns=["key", "field", "message"],
        )


@dataclass(frozen=True)
class PanelDataset:
    """Immutable district-week panel.

    ``observations`` is the canonical frame, ``municipalities`` the optional
    municipality table the districts were built from.  Treat both as
    read-only; :meth:`to_frame` hands out a private copy.
    """

    observations: pd.DataFrame
    municipalities: pd.DataFrame | None = None
    provenance: str = ""

    def __post_init__(self):
        obs = self.observations.reset_index(drop=True).copy()
        for col in PANEL_COLUMNS:
            if col not in obs.columns:
                obs[col] = np.nan
        obs = obs[list(PANEL_COLUMNS)]
        obs["district_id"] = obs["district_id"].astype(str)
        object.__setattr__(self, "observations", obs)

    def __len__(self):
        return len(self.observations)

    @property
    def districts(self) -> np.ndarray:
        return np.unique(self.observations["district_id"].to_numpy())

    def to_frame(self) -> pd.DataFrame:
        return self.observations.copy()


def _canonicalize(raw: pd.DataFrame, schema: dict | None) -> pd.DataFrame:
    if not schema:
        return raw
    return raw.rename(columns={v: k for k, v in schema.items()})


def load_panel(path, schema: dict | None = None, municipalities=None, provenance: str = "") -> PanelDataset:
    """Read and type-check a district-week panel CSV.

    Parameters
    ----------
    path : path-like
        UTF-8 CSV with a header row.
    schema : dict, optional
        Map from canonical column name to the column name used in the file.
    municipalities : DataFrame or path-like, optional
        Municipality table attached to the dataset for district checks.

    Raises
    ------
    MissingColumn, ParseError, DuplicateKey
    """
    raw = _canonicalize(_io.read_raw_csv(path), schema)
    # the response may be blank (weeks without mortality data); listwise deletion happens at fit time
    obs = _io.parse_columns(raw, PANEL_COLUMNS, optional=COVARIATE_COLUMNS + ("deaths_per_1k",), source=str(path))
    _check_unique(obs)
    if municipalities is not None and not isinstance(municipalities, pd.DataFrame):
        municipalities = load_municipalities(municipalities)
    return PanelDataset(obs, municipalities, provenance or f"loaded from {Path(path).name}")


def _check_unique(obs: pd.DataFrame) -> None:
    dup = obs.duplicated(list(KEY_COLUMNS), keep=False)
    if dup.any():
        first = obs[dup].iloc[0]
        key = tuple(first[c] for c in KEY_COLUMNS)
        same = (obs[list(KEY_COLUMNS)] == pd.Series(key, index=KEY_COLUMNS)).all(axis=1)
        rows = (np.flatnonzero(same.to_numpy()) + 2).tolist()
        raise DuplicateKey(key, rows)


def write_panel(panel: PanelDataset | pd.DataFrame, path) -> Path:
    frame = panel.observations if isinstance(panel, PanelDataset) else PanelDataset(panel).observations
    frame = frame.sort_values(list(KEY_COLUMNS), kind="mergesort")
    return _io.write_csv(frame, path)


def load_municipalities(path) -> pd.DataFrame:
    """Read the municipality table (one row per municipality, or per municipality-year).

    Raises
    ------
    DuplicateKey
        If a municipality (or municipality-year) repeats or a municipality is
        assigned to more than one district.
    """
    raw = _io.read_raw_csv(path)
    kinds = dict(MUNICIPALITY_COLUMNS)
    if "year" in raw.columns:
        kinds["year"] = _io.INT
    table = _io.parse_columns(raw, kinds, optional=MUNICIPALITY_OPTIONAL, source=str(path))
    check_municipalities(table)
    return table


def check_municipalities(table: pd.DataFrame) -> None:
    keys = ["municipality_id"] + (["year"] if "year" in table.columns else [])
    dup = table.duplicated(keys, keep=False)
    if dup.any():
        rows = (np.flatnonzero(dup.to_numpy()) + 2).tolist()
        raise DuplicateKey(tuple(table.loc[dup, keys].iloc[0]), rows)
    n_districts = table.groupby("municipality_id")["district_id"].nunique()
    if (n_districts > 1).any():
        muni = n_districts.index[n_districts > 1][0]
        rows = (np.flatnonzero((table["municipality_id"] == muni).to_numpy()) + 2).tolist()
        raise DuplicateKey((muni, "district_id"), rows)
    bad = table["population"] < 0
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise ParseError(i + 2, "population", [(i + 2, "population", table["population"].iloc[i])])


def validate_panel(panel: PanelDataset) -> ValidationReport:
    """List every invariant violation of ``panel``; an empty report means conforming."""
    report = ValidationReport()
    obs = panel.observations
    keys = list(zip(*(obs[c] for c in KEY_COLUMNS)))

    def flag(mask, column, message):
        for i in np.flatnonzero(np.asarray(mask, dtype=bool)):
            report.add(keys[i], column, message)

    month = obs["month_of_year"]
    flag(~month.isin(SUMMER_MONTHS), "month_of_year", "outside summer months June-August")
    flag(obs["week_index"] < 1, "week_index", "must be >= 1")
    flag(obs["deaths_per_1k"] < 0, "deaths_per_1k", "must be non-negative")
    for col in ("heat_days", "tropical_nights"):
        flag((obs[col] < 0) | (obs[col] > 7), col, "must lie in [0, 7]")
    flag(~obs["heat_wave"].isin((0, 1)), "heat_wave", "must be 0 or 1")
    expected = (obs["heat_days"] >= HEAT_WAVE_MIN_DAYS).astype(int)
    flag(obs["heat_wave"].isin((0, 1)) & (obs["heat_wave"] != expected),
         "heat_wave", "inconsistent with heat_days (heat_wave must equal heat_days >= 3)")
    share = obs["elderly_share"]
    flag(share.notna() & ((share < 0) | (share > 100)), "elderly_share", "percent must lie in [0, 100]")
    for col in ("hospital_distance_km", "altitude_km"):
        flag(obs[col].notna() & (obs[col] < 0), col, "must be non-negative")
    flag(obs.duplicated(list(KEY_COLUMNS), keep="first"), "district_id", "duplicate panel key")

    if panel.municipalities is not None:
        known = set(panel.municipalities["district_id"].astype(str))
        flag(~obs["district_id"].isin(known), "district_id", "district not in municipality table")
    return report
