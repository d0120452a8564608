"""Population-weighted aggregation from municipalities to districts.

The district value of a municipality-level quantity ``x`` is

    X_D = sum_M x_M * P_M / P_D,    P_D = sum_M P_M

with ``P_M`` the municipality population.  Municipalities with zero
population drop out (with a warning) rather than contribute a zero weight.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .exceptions import UnmappedMunicipality, ZeroTotalPopulation
from .panel import HEAT_WAVE_MIN_DAYS, PANEL_COLUMNS, PanelDataset

log = logging.getLogger(__name__)

# municipality table column -> district panel column
COVARIATE_MAP = {
    "elderly_share": "elderly_share",
    "mean_income_10k": "income_10k",
    "hospital_distance_km": "hospital_distance_km",
    "mean_altitude_km": "altitude_km",
}
HEAT_COLUMNS = ("heat_days", "tropical_nights")
METHODS = ("weighted_mean", "max")


@dataclass(frozen=True)
class WeightedSeries:
    """Entries of ``(municipality_id, value, population)``."""

    entries: tuple

    @classmethod
    def from_arrays(cls, values, populations, ids=None):
        values = list(values)
        ids = list(ids) if ids is not None else [str(i) for i in range(len(values))]
        return cls(tuple(zip(ids, values, populations)))

    @property
    def values(self) -> np.ndarray:
        return np.array([e[1] for e in self.entries], dtype=float)

    @property
    def populations(self) -> np.ndarray:
        return np.array([e[2] for e in self.entries], dtype=float)


def population_weighted_mean(series: WeightedSeries | Iterable) -> float:
    """Population-weighted mean of the series values.

    Raises
    ------
    ZeroTotalPopulation
        If the populations sum to zero (or the series is empty).
    """
    if not isinstance(series, WeightedSeries):
        series = WeightedSeries(tuple(series))
    values, pops = series.values, series.populations
    if np.any(pops < 0):
        raise ValueError("populations must be non-negative")
    total = math.fsum(pops)
    if not total > 0:
        raise ZeroTotalPopulation("total population of the aggregation unit is zero")
    # normalise weights first so a lone municipality reproduces its value exactly
    return math.fsum(values * (pops / total))


def _year_table(municipalities: pd.DataFrame, years) -> pd.DataFrame:
    """Municipality attributes expanded to one row per (municipality, year)."""
    table = municipalities.copy()
    table["municipality_id"] = table["municipality_id"].astype(str)
    table["district_id"] = table["district_id"].astype(str)
    if "year" in table.columns:
        return table
    years = pd.DataFrame({"year": sorted(set(years))})
    return table.merge(years, how="cross")


def _weighted_groups(frame: pd.DataFrame, columns, by) -> pd.DataFrame:
    # NaN-aware: the weight total for a column only counts rows where it is observed
    out = {}
    w = frame["population"].to_numpy(dtype=float)
    keys = frame[by]
    for col in columns:
        x = frame[col].to_numpy(dtype=float)
        ok = ~np.isnan(x)
        groups = [keys[c].to_numpy() for c in by]
        den = pd.Series(np.where(ok, w, 0.0)).groupby(groups).transform("sum").to_numpy()
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(ok & (den > 0), w / den, 0.0)
        num = pd.Series(np.where(ok, x, 0.0) * share).groupby(groups).sum()
        has = pd.Series(ok & (den > 0)).groupby(groups).any()
        out[col] = num.where(has).to_numpy()
    idx = num.index
    res = pd.DataFrame(out)
    for i, c in enumerate(by):
        res[c] = idx.get_level_values(i)
    return res[list(by) + list(columns)]


def aggregate_panel(municipality_panel: pd.DataFrame, municipality_table: pd.DataFrame,
                    method: str = "weighted_mean", deaths: pd.DataFrame | None = None,
                    provenance: str = "") -> PanelDataset:
    """Build the district-week panel from municipality-week heat indicators.

    Parameters
    ----------
    municipality_panel : DataFrame
        Weekly indicators per municipality (see
        :func:`heatpanel.heat.compute_weekly_indicators`).
    municipality_table : DataFrame
        Municipality populations, district assignment and covariates.
    method : {"weighted_mean", "max"}
        How heat indicators are combined; covariates always use the
        population-weighted mean.  District ``heat_wave`` is re-derived as
        aggregated ``heat_days >= 3``.
    deaths : DataFrame, optional
        District-week response ``district_id, year, week_index, deaths_per_1k``.
        Weeks without a response keep ``deaths_per_1k`` missing.

    Raises
    ------
    UnmappedMunicipality
        If a municipality in the panel has no population or district entry.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    panel = municipality_panel.copy()
    panel["municipality_id"] = panel["municipality_id"].astype(str)
    table = _year_table(municipality_table, panel["year"].unique())

    keys = ["municipality_id", "year"]
    known = set(zip(table["municipality_id"], table["year"]))
    missing = sorted({k for k in zip(panel["municipality_id"], panel["year"]) if k not in known})
    if missing:
        raise UnmappedMunicipality(
            "no population/district entry for " + ", ".join(f"{m} ({y})" for m, y in missing[:10])
        )

    zero = table["population"] <= 0
    for muni in sorted(set(table.loc[zero, "municipality_id"])):
        log.warning("municipality %s has zero population and is excluded from weighted aggregation", muni)

    cov_cols = [c for c in COVARIATE_MAP if c in table.columns]
    merged = panel.merge(table[keys + ["district_id", "population"] + cov_cols], on=keys, how="left")
    merged = merged[merged["population"] > 0]
    by = ["district_id", "year", "week_index"]

    month = merged.groupby(by, sort=True)["month_of_year"].agg(lambda s: int(s.mode().iloc[0])).reset_index()
    if method == "weighted_mean":
        heat = _weighted_groups(merged, HEAT_COLUMNS, by)
    else:
        heat = merged.groupby(by, sort=True)[list(HEAT_COLUMNS)].max().reset_index()

    table_pos = table[table["population"] > 0]
    covs = _weighted_groups(table_pos, cov_cols, ["district_id", "year"]) if cov_cols else None

    out = month.merge(heat, on=by)
    out["heat_wave"] = (out["heat_days"] >= HEAT_WAVE_MIN_DAYS).astype(np.int64)
    if covs is not None:
        covs = covs.rename(columns=COVARIATE_MAP)
        out = out.merge(covs, on=["district_id", "year"], how="left")
    if deaths is not None:
        d = deaths[["district_id", "year", "week_index", "deaths_per_1k"]].copy()
        d["district_id"] = d["district_id"].astype(str)
        out = out.merge(d, on=by, how="left")
    for col in PANEL_COLUMNS:
        if col not in out.columns:
            out[col] = np.nan
    out = out[list(PANEL_COLUMNS)].sort_values(by, kind="mergesort").reset_index(drop=True)
    return PanelDataset(out, municipality_table, provenance or f"aggregated ({method})")


def district_weighted_mean(values: pd.DataFrame, municipality_table: pd.DataFrame, column: str,
                           year=None) -> pd.Series:
    """Population-weighted district mean of a per-municipality ``column``.

    ``values`` carries ``municipality_id`` and ``column``.  Populations come
    from ``municipality_table`` (restricted to ``year`` when it is per-year).
    """
    table = municipality_table.copy()
    table["municipality_id"] = table["municipality_id"].astype(str)
    if "year" in table.columns and year is not None:
        table = table[table["year"] == year]
    vals = values[["municipality_id", column]].copy()
    vals["municipality_id"] = vals["municipality_id"].astype(str)
    unknown = sorted(set(vals["municipality_id"]) - set(table["municipality_id"]))
    if unknown:
        raise UnmappedMunicipality(f"no population/district entry for {', '.join(unknown[:10])}")
    merged = vals.merge(table[["municipality_id", "district_id", "population"]], on="municipality_id")
    merged = merged[merged["population"] > 0]
    res = _weighted_groups(merged, [column], ["district_id"])
    return res.set_index("district_id")[column]
