"""Synthetic data from the mortality model equations.

Weekly deaths per 1,000 inhabitants of district ``d`` in year ``t`` and
summer week ``w`` (month ``m``) are drawn as

    y = intercept + b_heat * H + b_wave * W + b_tropical * T
        + b_elderly * E + b_interaction * H * E + b_green * G
        + a_d + g_t + h_m + s * (1 + het * H / 7) * eps

with ``H`` heat days (binomial out of 7), ``W = 1{H >= 3}``, ``T`` tropical
nights, ``E`` the share of inhabitants aged 65+ in percent, ``G`` the
standardized residential green share, ``a_d, g_t, h_m`` normal district,
year and month effects and ``eps`` standard normal.

:func:`simulate_panel` draws a district panel directly (Monte Carlo use).
:func:`synthesize_bundle` writes every pipeline input file: cell
temperatures, the cell map, municipalities, land cover and mask grids,
scenario projections and the district response.  Its response uses the
same equation with ``H``, ``T`` and ``E`` taken from the aggregated
synthetic grid, so downstream fits recover the configured coefficients.

All randomness comes from one Philox generator seeded by the caller.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import pandas as pd

from . import _io
from .aggregation import aggregate_panel
from .exceptions import InvalidParameter
from .greenness import OUTSIDE, LandcoverGrid, ResidentialMask, write_landcover, write_mask
from .heat import compute_weekly_indicators, summer_dates, summer_week
from .panel import HEAT_WAVE_MIN_DAYS, PANEL_COLUMNS
from .regression.spec import published_models_text

GREEN_CODES = (10, 20, 30)
OTHER_CODES = (40, 50, 60, 80, 90)
LANDCOVER_YEARS = (2020, 2021)
BUNDLE_FILES = (
    "grid_days.csv", "cell_map.csv", "municipalities.csv", "deaths.csv", "landcover_2020.grid",
    "landcover_2021.grid", "mask.grid", "green_classes.txt", "scenarios.csv", "models.ini", "truth.cfg",
)


@dataclass(frozen=True)
class SynthParams:
    n_districts: int = 12
    municipalities_per_district: int = 3
    cells_per_municipality: int = 2
    first_year: int = 2015
    n_years: int = 8
    weeks_per_year: int = 13
    intercept: float = 0.3
    beta_heat: float = 0.004
    beta_heat_wave: float = 0.0
    beta_tropical: float = 0.0
    beta_elderly: float = 0.0
    beta_interaction: float = 0.0
    beta_green: float = 0.0
    district_sd: float = 0.03
    year_sd: float = 0.02
    month_sd: float = 0.01
    noise_sd: float = 0.05
    heteroskedasticity: float = 0.0
    heat_probability: float = 0.15
    elderly_mean: float = 20.0
    elderly_sd: float = 2.5
    block_size: int = 10

    def __post_init__(self):
        positive = ("n_districts", "municipalities_per_district", "cells_per_municipality", "n_years",
                    "weeks_per_year", "block_size")
        for name in positive:
            if int(getattr(self, name)) < 1:
                raise InvalidParameter(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("district_sd", "year_sd", "month_sd", "noise_sd", "elderly_sd", "heteroskedasticity"):
            if not getattr(self, name) >= 0:
                raise InvalidParameter(f"{name} must be non-negative, got {getattr(self, name)}")
        if not 0.0 < self.heat_probability < 1.0:
            raise InvalidParameter(f"heat_probability must lie in (0, 1), got {self.heat_probability}")
        if self.weeks_per_year > 13:
            raise InvalidParameter("weeks_per_year must be <= 13 (every year has at least 13 summer weeks)")

    @property
    def years(self) -> list[int]:
        return list(range(self.first_year, self.first_year + self.n_years))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SynthParams":
        """Build from text values (e.g. a ``key = value`` config); unknown keys raise."""
        kinds = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(mapping) - set(kinds))
        if unknown:
            raise InvalidParameter(f"unknown synthesis parameter(s): {unknown}")
        values = {}
        for key, text in mapping.items():
            conv = int if kinds[key] in ("int", int) else float
            try:
                values[key] = conv(text)
            except (TypeError, ValueError):
                raise InvalidParameter(f"{key}: cannot read {text!r} as {conv.__name__}") from None
        return cls(**values)

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator, identical across platforms for a given seed."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise InvalidParameter(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(seed))


def summer_weeks(year: int, n_weeks: int = 13) -> list[tuple[int, int]]:
    """First ``n_weeks`` summer weeks of ``year`` as ``(week_index, month_of_year)``."""
    seen = {}
    for day in summer_dates(year):
        _, week, month = summer_week(day)
        seen.setdefault(week, month)
    return sorted(seen.items())[:n_weeks]


def _effects(rng, params: SynthParams, n_districts: int):
    return (rng.normal(0.0, params.district_sd, n_districts) if params.district_sd > 0 else np.zeros(n_districts),
            rng.normal(0.0, params.year_sd, params.n_years) if params.year_sd > 0 else np.zeros(params.n_years),
            rng.normal(0.0, params.month_sd, 13) if params.month_sd > 0 else np.zeros(13))


def response(frame: pd.DataFrame, params: SynthParams, rng, district_effect, year_effect, month_effect) -> np.ndarray:
    """Draw ``deaths_per_1k`` for the rows of ``frame`` from the model equation."""
    H = frame["heat_days"].to_numpy(dtype=float)
    W = (H >= HEAT_WAVE_MIN_DAYS).astype(float)
    T = frame["tropical_nights"].to_numpy(dtype=float)
    E = frame["elderly_share"].to_numpy(dtype=float)
    G = frame["greenness_z"].to_numpy(dtype=float) if "greenness_z" in frame else np.zeros(len(frame))
    G = np.nan_to_num(G)
    y = (params.intercept + params.beta_heat * H + params.beta_heat_wave * W + params.beta_tropical * T
         + params.beta_elderly * E + params.beta_interaction * H * E + params.beta_green * G
         + district_effect + year_effect + month_effect)
    eps = rng.standard_normal(len(frame))
    return y + params.noise_sd * (1.0 + params.heteroskedasticity * H / 7.0) * eps


def simulate_panel(params: SynthParams, rng: np.random.Generator) -> pd.DataFrame:
    """District-week panel drawn directly from the model equation.

    Heat days are binomial with a success probability that shifts by
    district, year and week, so heat is correlated with every fixed effect.
    """
    D, Y = params.n_districts, params.n_years
    district_ids = np.array([f"D{d + 1:03d}" for d in range(D)])
    calendar = [(y, w, m) for y in params.years for w, m in summer_weeks(y, params.weeks_per_year)]
    n_weeks = len(calendar) // Y

    logit0 = np.log(params.heat_probability / (1 - params.heat_probability))
    d_heat = rng.normal(0.0, 0.5, D)
    y_heat = rng.normal(0.0, 0.4, Y)
    w_heat = 0.6 * np.sin(np.pi * (np.arange(n_weeks) + 0.5) / n_weeks) - 0.3
    lin = logit0 + d_heat[:, None, None] + y_heat[None, :, None] + w_heat[None, None, :] \
        + rng.normal(0.0, 0.5, (D, Y, n_weeks))
    H = rng.binomial(7, 1.0 / (1.0 + np.exp(-lin)))
    T = rng.binomial(H, 0.4)

    E_dist = rng.normal(params.elderly_mean, params.elderly_sd, D)
    E = E_dist[:, None] + 0.15 * np.arange(Y)[None, :] + rng.normal(0.0, 0.2, (D, Y))
    G = rng.standard_normal(D)[:, None] + rng.normal(0.0, 0.1, (D, Y))
    income = rng.normal(2.8, 0.3, D)[:, None] + 0.04 * np.arange(Y)[None, :]
    distance = rng.gamma(4.0, 3.0, D)
    altitude = rng.uniform(0.15, 1.2, D)

    di, yi, wi = (a.reshape(-1) for a in np.meshgrid(np.arange(D), np.arange(Y), np.arange(n_weeks), indexing="ij"))
    cal = np.array(calendar).reshape(Y, n_weeks, 3)
    frame = pd.DataFrame({
        "district_id": district_ids[di],
        "year": cal[yi, wi, 0],
        "month_of_year": cal[yi, wi, 2],
        "week_index": cal[yi, wi, 1],
        "heat_days": H.reshape(-1).astype(float),
        "heat_wave": (H.reshape(-1) >= HEAT_WAVE_MIN_DAYS).astype(np.int64),
        "tropical_nights": T.reshape(-1).astype(float),
        "elderly_share": E[di, yi],
        "greenness_z": G[di, yi],
        "income_10k": income[di, yi],
        "hospital_distance_km": distance[di],
        "altitude_km": altitude[di],
    })
    a_d, g_t, h_m = _effects(rng, params, D)
    frame["deaths_per_1k"] = response(frame, params, rng, a_d[di], g_t[yi], h_m[frame["month_of_year"].to_numpy()])
    return frame[list(PANEL_COLUMNS)]


# ---------------------------------------------------------------------------
# file bundle

def _municipalities(params: SynthParams, rng) -> pd.DataFrame:
    rows = []
    M = params.municipalities_per_district
    for d in range(params.n_districts):
        e_base = rng.normal(params.elderly_mean, params.elderly_sd)
        income = rng.normal(2.8, 0.3)
        for j in range(M):
            muni = f"M{d + 1:03d}{j + 1:02d}"
            pop = int(rng.integers(800, 30000))
            e_muni = e_base + rng.normal(0.0, 1.0)
            inc = income + rng.normal(0.0, 0.1)
            dist = float(rng.gamma(4.0, 3.0))
            alt = float(rng.uniform(0.15, 1.2))
            for k, year in enumerate(params.years):
                rows.append({
                    "municipality_id": muni, "district_id": f"D{d + 1:03d}", "year": year,
                    "population": int(round(pop * (1.0 + 0.004 * k))),
                    "elderly_share": round(e_muni + 0.15 * k, 4),
                    "mean_income_10k": round(inc + 0.04 * k, 4),
                    "hospital_distance_km": round(dist, 3),
                    "mean_altitude_km": round(alt, 4),
                })
    return pd.DataFrame(rows)


def _grid_days(params: SynthParams, rng, cell_map: pd.DataFrame) -> pd.DataFrame:
    cells = cell_map["cell_id"].to_numpy()
    district_of_cell = cell_map["municipality_id"].str.slice(1, 4).astype(int).to_numpy() - 1
    d_offset = rng.normal(0.0, 1.5, params.n_districts)
    c_offset = rng.normal(0.0, 0.7, len(cells))
    frames = []
    for year in params.years:
        dates = summer_dates(year)
        doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
        clim = 24.0 + 4.0 * np.sin(np.pi * (doy - 150.0) / 95.0)
        anomaly = rng.normal(0.0, 1.2)
        day_shock = rng.normal(0.0, 3.0, (len(dates), params.n_districts))
        t_max = (clim[:, None] + anomaly + d_offset[district_of_cell][None, :] + c_offset[None, :]
                 + day_shock[:, district_of_cell] + rng.normal(0.0, 0.5, (len(dates), len(cells))))
        t_min = t_max - rng.uniform(8.0, 13.0, t_max.shape)
        frames.append(pd.DataFrame({
            "cell_id": np.tile(cells, len(dates)),
            "date": np.repeat([d.isoformat() for d in dates], len(cells)),
            "t_max_c": np.round(t_max.reshape(-1), 1),
            "t_min_c": np.round(t_min.reshape(-1), 1),
        }))
    return pd.concat(frames, ignore_index=True).sort_values(["cell_id", "date"], kind="mergesort")


def _land_grids(params: SynthParams, rng, munis: list[str]):
    b = params.block_size
    per_row = int(np.ceil(np.sqrt(len(munis))))
    n_rows = int(np.ceil(len(munis) / per_row))
    labels = np.full((n_rows * b, per_row * b), OUTSIDE, dtype=object)
    classes = rng.choice(OTHER_CODES, size=labels.shape)
    for i, muni in enumerate(munis):
        r, c = divmod(i, per_row)
        block = rng.random((b, b)) < 0.6
        block[b // 2, b // 2] = True
        labels[r * b:(r + 1) * b, c * b:(c + 1) * b][block] = muni
        share = rng.uniform(0.15, 0.75)
        green = rng.random((b, b)) < share
        block_classes = np.where(green, rng.choice(GREEN_CODES, size=(b, b)), rng.choice(OTHER_CODES, size=(b, b)))
        classes[r * b:(r + 1) * b, c * b:(c + 1) * b] = block_classes
    later = classes.copy()
    flip = rng.random(classes.shape) < 0.03
    later[flip] = rng.choice(GREEN_CODES + OTHER_CODES, size=int(flip.sum()))
    mask = ResidentialMask(labels.astype(str), 10.0)
    return {2020: LandcoverGrid(classes, 10.0), 2021: LandcoverGrid(later, 10.0)}, mask


def _scenarios(panel: pd.DataFrame, rng) -> pd.DataFrame:
    """BASELINE 2018-2022 from the synthetic panel; RCP45/RCP85 2050 as shifted baselines.

    Projections: heat days scale by 1.6 (RCP45) or 2.3 (RCP85) of the
    district baseline mean plus noise; elderly share grows by 6 points plus
    noise under both pathways (demography does not depend on the pathway).
    """
    yearly = panel.groupby(["district_id", "year"], sort=True).agg(
        yearly_heat_days=("heat_days", "sum"), elderly_share=("elderly_share", "first")).reset_index()
    base = yearly[(yearly["year"] >= 2018) & (yearly["year"] <= 2022)].copy()
    base.insert(1, "scenario", "BASELINE")
    means = base.groupby("district_id", sort=True)[["yearly_heat_days", "elderly_share"]].mean()
    ageing = 6.0 + rng.normal(0.0, 1.0, len(means))
    frames = [base]
    for name, factor in (("RCP45", 1.6), ("RCP85", 2.3)):
        frames.append(pd.DataFrame({
            "district_id": means.index, "scenario": name, "year": 2050,
            "yearly_heat_days": np.maximum(means["yearly_heat_days"].to_numpy() * factor
                                           + rng.normal(0.0, 1.0, len(means)), 0.0),
            "elderly_share": means["elderly_share"].to_numpy() + ageing,
        }))
    out = pd.concat(frames, ignore_index=True)
    out["yearly_heat_days"] = out["yearly_heat_days"].round(4)
    out["elderly_share"] = out["elderly_share"].round(4)
    return out[["district_id", "scenario", "year", "yearly_heat_days", "elderly_share"]]


def synthesize_bundle(params: SynthParams, seed: int, out_dir) -> dict:
    """Write a complete, self-consistent input bundle to ``out_dir``.

    Returns a mapping of file name to path.  A fixed ``seed`` and
    ``params`` give byte-identical files.
    """
    rng = make_rng(seed)
    out_dir = Path(out_dir)
    table = _municipalities(params, rng)
    munis = sorted(table["municipality_id"].unique())
    cell_map = pd.DataFrame(
        [(m, f"C{i * params.cells_per_municipality + j + 1:05d}")
         for i, m in enumerate(munis) for j in range(params.cells_per_municipality)],
        columns=["municipality_id", "cell_id"])
    grid_days = _grid_days(params, rng, cell_map)
    grids, mask = _land_grids(params, rng, munis)

    # response drawn on the district panel the pipeline itself will build
    gd = grid_days.assign(date=[dt.date.fromisoformat(s) for s in grid_days["date"]])
    weekly = compute_weekly_indicators(gd, cell_map)
    weekly = weekly[weekly["year"].isin(params.years)]
    panel = aggregate_panel(weekly, table).to_frame()
    keep = panel.groupby(["district_id", "year"], sort=True)["week_index"].rank(method="first") <= params.weeks_per_year
    panel = panel[keep.to_numpy()].reset_index(drop=True)
    codes_d = panel["district_id"].str.slice(1).astype(int).to_numpy() - 1
    codes_y = panel["year"].to_numpy() - params.first_year
    a_d, g_t, h_m = _effects(rng, params, params.n_districts)
    panel["deaths_per_1k"] = response(panel.assign(greenness_z=0.0), params, rng,
                                      a_d[codes_d], g_t[codes_y], h_m[panel["month_of_year"].to_numpy()])
    deaths = panel[["district_id", "year", "week_index", "deaths_per_1k"]].copy()
    deaths["deaths_per_1k"] = deaths["deaths_per_1k"].round(8)

    scenarios = _scenarios(panel, rng)
    paths = {
        "grid_days.csv": _io.write_csv(grid_days, out_dir / "grid_days.csv"),
        "cell_map.csv": _io.write_csv(cell_map, out_dir / "cell_map.csv"),
        "municipalities.csv": _io.write_csv(table, out_dir / "municipalities.csv"),
        "deaths.csv": _io.write_csv(deaths, out_dir / "deaths.csv"),
        "mask.grid": write_mask(mask, out_dir / "mask.grid"),
        "green_classes.txt": _io.atomic_write(out_dir / "green_classes.txt",
                                              " ".join(str(c) for c in GREEN_CODES) + "\n"),
        "scenarios.csv": _io.write_csv(scenarios, out_dir / "scenarios.csv"),
        "models.ini": _io.atomic_write(out_dir / "models.ini", published_models_text()),
        "truth.cfg": _io.atomic_write(out_dir / "truth.cfg", f"seed = {int(seed)}\n" + params.to_text()),
    }
    for year, grid in grids.items():
        paths[f"landcover_{year}.grid"] = write_landcover(grid, out_dir / f"landcover_{year}.grid")
    return paths
