"""Heat-age vulnerability of districts and percentile ranking against a baseline.

Each district is a point (yearly heat days, elderly share).  Coordinates are
standardized with the cross-district mean and n-1 standard deviation of the
baseline district means (default baseline 2018-2022).  The composite score
is the mean of the two z-coordinates; per-axis percentiles are reported
alongside so the composite can be ignored.  Percentiles use the inclusive
rule ``100 * #{baseline <= x} / #baseline``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _io
from .exceptions import DegenerateVariance, DistrictMismatch, DuplicateKey, EmptyBaseline, InvalidParameter
from .validation import check_columns, sample_moments

SCENARIOS = ("BASELINE", "RCP45", "RCP85")
BASELINE_YEARS = (2018, 2022)
SCENARIO_COLUMNS = {"district_id": _io.STR, "scenario": _io.STR, "year": _io.INT,
                    "yearly_heat_days": _io.FLOAT, "elderly_share": _io.FLOAT}
POINT_COLUMNS = ["district_id", "scenario", "year", "yearly_heat_days", "elderly_share",
                 "heat_z", "age_z", "score", "percentile", "heat_percentile", "age_percentile"]
SHIFT_COLUMNS = ["district_id", "base_heat_z", "base_age_z", "proj_heat_z", "proj_age_z", "base_pct", "proj_pct"]


@dataclass(frozen=True)
class AxisMoments:
    heat_mean: float
    heat_sd: float
    age_mean: float
    age_sd: float


@dataclass(frozen=True)
class VulnerabilityPoint:
    district_id: str
    scenario: str
    heat_z: float
    age_z: float
    score: float
    percentile: float = float("nan")


def load_scenarios(path) -> pd.DataFrame:
    frame = _io.parse_columns(_io.read_raw_csv(path), SCENARIO_COLUMNS, source=str(path))
    return check_scenarios(frame)


def check_scenarios(frame: pd.DataFrame) -> pd.DataFrame:
    check_columns(frame, SCENARIO_COLUMNS, "scenario table")
    frame = frame.copy()
    frame["district_id"] = frame["district_id"].astype(str)
    frame["scenario"] = frame["scenario"].str.upper().str.replace(".", "", regex=False)
    bad = sorted(set(frame["scenario"]) - set(SCENARIOS))
    if bad:
        raise InvalidParameter(f"unknown scenario(s) {bad}; expected {SCENARIOS}")
    dup = frame.duplicated(["district_id", "scenario", "year"], keep=False)
    if dup.any():
        raise DuplicateKey(tuple(frame.loc[dup, ["district_id", "scenario", "year"]].iloc[0]),
                           (np.flatnonzero(dup.to_numpy()) + 2).tolist())
    if (frame["yearly_heat_days"] < 0).any():
        raise InvalidParameter("yearly_heat_days must be non-negative")
    return frame


def district_means(rows: pd.DataFrame, scenario: str = "BASELINE", years=None) -> pd.DataFrame:
    """Per-district means of heat days and elderly share over the selected rows."""
    sel = rows[rows["scenario"] == scenario] if "scenario" in rows.columns else rows
    if years is not None:
        lo, hi = years
        sel = sel[(sel["year"] >= lo) & (sel["year"] <= hi)]
    out = sel.groupby("district_id", sort=True)[["yearly_heat_days", "elderly_share"]].mean().reset_index()
    out["district_id"] = out["district_id"].astype(str)
    return out


def baseline_moments(rows: pd.DataFrame, years=BASELINE_YEARS) -> AxisMoments:
    """Cross-district mean and n-1 standard deviation of baseline district means.

    Raises
    ------
    DegenerateVariance
        Fewer than two districts, or an axis without spread.
    """
    means = district_means(rows, "BASELINE", years)
    if len(means) < 2:
        raise DegenerateVariance(f"baseline needs at least two districts, got {len(means)}")
    hm, hs = sample_moments(means["yearly_heat_days"], "baseline heat days")
    am, as_ = sample_moments(means["elderly_share"], "baseline elderly share")
    return AxisMoments(hm, hs, am, as_)


def vulnerability_score(point, moments: AxisMoments, district_id: str = "", scenario: str = "") -> VulnerabilityPoint:
    """Standardize a ``(heat_days, elderly_share)`` point; score is the mean of both z values."""
    if not (moments.heat_sd > 0 and moments.age_sd > 0):
        raise DegenerateVariance("baseline moments have zero spread")
    heat, age = point
    hz = (heat - moments.heat_mean) / moments.heat_sd
    az = (age - moments.age_mean) / moments.age_sd
    return VulnerabilityPoint(district_id, scenario, hz, az, (hz + az) / 2.0)


def percentile_rank(score, baseline_scores) -> np.ndarray | float:
    """Inclusive percentile of ``score`` (scalar or array) within ``baseline_scores``."""
    base = np.sort(np.asarray(baseline_scores, dtype=float).reshape(-1))
    if base.size == 0:
        raise EmptyBaseline("baseline score distribution is empty")
    pct = 100.0 * np.searchsorted(base, score, side="right") / base.size
    return float(pct) if np.ndim(pct) == 0 else pct


class VulnerabilityRanker(TransformerMixin, BaseEstimator):
    """Fit on baseline rows; transform scenario rows into ranked vulnerability points.

    Parameters
    ----------
    baseline_years : (int, int)
        Inclusive year range averaged per district for the baseline.
    """

    def __init__(self, baseline_years=BASELINE_YEARS):
        self.baseline_years = baseline_years

    def fit(self, X, y=None):
        rows = check_scenarios(X)
        means = district_means(rows, "BASELINE", self.baseline_years)
        if means.empty:
            raise EmptyBaseline(f"no BASELINE rows in {self.baseline_years}")
        self.moments_ = baseline_moments(rows, self.baseline_years)
        base = self._standardize(means)
        self.baseline_ = base
        self.baseline_scores_ = np.sort(base["score"].to_numpy())
        self.baseline_heat_z_ = np.sort(base["heat_z"].to_numpy())
        self.baseline_age_z_ = np.sort(base["age_z"].to_numpy())
        return self

    def _standardize(self, frame: pd.DataFrame) -> pd.DataFrame:
        m = self.moments_
        out = frame.copy()
        out["heat_z"] = (out["yearly_heat_days"] - m.heat_mean) / m.heat_sd
        out["age_z"] = (out["elderly_share"] - m.age_mean) / m.age_sd
        out["score"] = (out["heat_z"] + out["age_z"]) / 2.0
        return out

    def transform(self, X) -> pd.DataFrame:
        check_is_fitted(self, "moments_")
        out = self._standardize(X)
        out["percentile"] = percentile_rank(out["score"].to_numpy(), self.baseline_scores_)
        out["heat_percentile"] = percentile_rank(out["heat_z"].to_numpy(), self.baseline_heat_z_)
        out["age_percentile"] = percentile_rank(out["age_z"].to_numpy(), self.baseline_age_z_)
        return out

    def baseline_points(self) -> pd.DataFrame:
        check_is_fitted(self, "moments_")
        pts = self.transform(self.baseline_)
        pts["scenario"] = "BASELINE"
        pts["year"] = self.baseline_years[1]
        return pts[POINT_COLUMNS]


def vulnerability_points(rows: pd.DataFrame, target_year: int = 2050, baseline_years=BASELINE_YEARS) -> pd.DataFrame:
    """Baseline and projected vulnerability points for every district and scenario."""
    rows = check_scenarios(rows)
    ranker = VulnerabilityRanker(baseline_years).fit(rows)
    frames = [ranker.baseline_points()]
    proj = rows[(rows["scenario"] != "BASELINE") & (rows["year"] == target_year)]
    if not proj.empty:
        frames.append(ranker.transform(proj)[POINT_COLUMNS])
    out = pd.concat(frames, ignore_index=True)
    order = {s: i for i, s in enumerate(SCENARIOS)}
    out["_o"] = out["scenario"].map(order)
    return out.sort_values(["_o", "district_id"], kind="mergesort").drop(columns="_o").reset_index(drop=True)


def shift_table(baseline_points: pd.DataFrame, scenario_points: pd.DataFrame) -> pd.DataFrame:
    """Per-district move from baseline to scenario coordinates.

    Raises
    ------
    DistrictMismatch
        If the two point sets cover different districts.
    """
    base = baseline_points.set_index("district_id")
    proj = scenario_points.set_index("district_id")
    if set(base.index) != set(proj.index) or base.index.has_duplicates or proj.index.has_duplicates:
        only_b = sorted(set(base.index) - set(proj.index))
        only_p = sorted(set(proj.index) - set(base.index))
        raise DistrictMismatch(f"district sets differ (baseline only: {only_b}, scenario only: {only_p})")
    proj = proj.loc[base.index]
    out = pd.DataFrame({
        "district_id": base.index.astype(str),
        "base_heat_z": base["heat_z"].to_numpy(),
        "base_age_z": base["age_z"].to_numpy(),
        "proj_heat_z": proj["heat_z"].to_numpy(),
        "proj_age_z": proj["age_z"].to_numpy(),
        "base_pct": base["percentile"].to_numpy(),
        "proj_pct": proj["percentile"].to_numpy(),
    })
    out["delta_heat_z"] = out["proj_heat_z"] - out["base_heat_z"]
    out["delta_age_z"] = out["proj_age_z"] - out["base_age_z"]
    out["delta_pct"] = out["proj_pct"] - out["base_pct"]
    return out.sort_values("district_id", kind="mergesort").reset_index(drop=True)
