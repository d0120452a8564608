"""Batch command line: ``heatpanel <stage> [options]``.

Stages read their inputs from and write their outputs to ``--out`` unless a
path is given explicitly, so after ``synthesize`` the remaining stages run
without further arguments::

    heatpanel --out run synthesize --seed 42
    heatpanel --out run indicators
    heatpanel --out run aggregate
    heatpanel --out run greenness
    heatpanel --out run regress
    heatpanel --out run margins
    heatpanel --out run forecast
    heatpanel --out run rank

Exit status: 0 success, 1 panel validation violations, 2 errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd

from . import _io
from .aggregation import aggregate_panel
from .exceptions import EmptyPanel, HeatPanelError, InvalidParameter
from .forecast import SCENARIOS, load_scenarios, shift_table, vulnerability_points
from .greenness import (
    GREENNESS_YEARS,
    attach_greenness,
    compute_all_rgs,
    default_green_classes,
    district_greenness,
    load_class_table,
    load_green_classes,
    read_landcover,
    read_mask,
)
from .heat import compute_weekly_indicators, load_cell_map, load_grid_days, load_indicators
from .margins import DEFAULT_LEVEL, MARGINS_COLUMNS, margins_frame, marginal_effect
from .panel import load_municipalities, load_panel, validate_panel, write_panel
from .regression import PUBLISHED_MODELS, fit_model, load_model_specs, regression_table
from .regression.ols import FitResult
from .regression.report import coefficient_frame, statistics_frame
from .synth import SynthParams, synthesize_bundle
from .validation import sample_moments

log = logging.getLogger("heatpanel")

EXIT_OK, EXIT_INVALID, EXIT_ERROR = 0, 1, 2

# default file names inside the output directory
FILES = {
    "grid_days": "grid_days.csv",
    "cell_map": "cell_map.csv",
    "municipalities": "municipalities.csv",
    "deaths": "deaths.csv",
    "indicators": "indicators.csv",
    "panel": "panel.csv",
    "validation": "validation.csv",
    "mask": "mask.grid",
    "green_classes": "green_classes.txt",
    "rgs": "rgs_municipality.csv",
    "district_rgs": "greenness_district.csv",
    "panel_green": "panel_green.csv",
    "models": "models.ini",
    "fits": "fits.json",
    "fit_stats": "fit_stats.csv",
    "margins": "margins.csv",
    "scenarios": "scenarios.csv",
    "points": "vulnerability_points.csv",
}


@dataclass
class RunConfig:
    """Settings shared by all stages: defaults < config file < command-line flags."""

    out_dir: Path = Path(".")
    seed: int = 42
    level: float = DEFAULT_LEVEL
    vcov: str | None = None
    models: str | None = None
    green_classes: str | None = None
    scenario: str | None = None
    target_year: int = 2050
    paths: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)

    def path(self, key: str, override=None) -> Path:
        if override:
            return Path(override)
        if key in self.paths:
            return Path(self.paths[key])
        return self.out_dir / FILES[key]

    @classmethod
    def from_sources(cls, config_path=None, **flags) -> "RunConfig":
        cfg = cls()
        if config_path:
            simple = {f.name: f.type for f in fields(cls) if f.name not in ("paths", "synth")}
            for key, value in _io.read_key_value(config_path).items():
                if key.startswith("path."):
                    cfg.paths[key[5:]] = value
                elif key == "out_dir":
                    cfg.out_dir = Path(value)
                elif key in simple:
                    setattr(cfg, key, _convert(key, value, simple[key]))
                else:
                    cfg.synth[key] = value
        for key, value in flags.items():
            if value is not None:
                setattr(cfg, key, Path(value) if key == "out_dir" else value)
        unknown = sorted(set(cfg.paths) - set(FILES))
        if unknown:
            raise InvalidParameter(f"unknown path key(s) in config: {unknown}")
        return cfg


def _convert(key, value, kind):
    kind = str(kind)
    try:
        if kind.startswith("int"):
            return int(value)
        if kind.startswith("float"):
            return float(value)
    except ValueError:
        raise InvalidParameter(f"config {key}: cannot read {value!r}") from None
    return value


class ValidationFailed(Exception):
    def __init__(self, n):
        self.n = n
        super().__init__(f"{n} panel validation violation(s)")


# ---------------------------------------------------------------------------
# stages

def cmd_synthesize(cfg: RunConfig, args) -> list:
    params = SynthParams.from_mapping(cfg.synth)
    paths = synthesize_bundle(params, cfg.seed, cfg.out_dir)
    return [paths[k] for k in sorted(paths)]


def cmd_indicators(cfg: RunConfig, args) -> list:
    grid = load_grid_days(cfg.path("grid_days", args.grid_days))
    cell_map = load_cell_map(cfg.path("cell_map", args.cell_map))
    munis = None
    table_path = cfg.path("municipalities", args.municipalities)
    if table_path.is_file():
        munis = sorted(set(load_municipalities(table_path)["municipality_id"]))
    weekly = compute_weekly_indicators(grid, cell_map, munis)
    return [_io.write_csv(weekly, cfg.path("indicators", args.output))]


def cmd_aggregate(cfg: RunConfig, args) -> list:
    weekly = load_indicators(cfg.path("indicators", args.indicators))
    table = load_municipalities(cfg.path("municipalities", args.municipalities))
    deaths_path = cfg.path("deaths", args.deaths)
    deaths = None
    if deaths_path.is_file():
        deaths = _io.parse_columns(_io.read_raw_csv(deaths_path),
                                   {"district_id": _io.STR, "year": _io.INT, "week_index": _io.INT,
                                    "deaths_per_1k": _io.FLOAT}, optional=("deaths_per_1k",),
                                   source=str(deaths_path))
    panel = aggregate_panel(weekly, table, method=args.method, deaths=deaths)
    if len(panel) == 0:
        raise EmptyPanel("aggregation produced no district weeks")
    report = validate_panel(panel)
    written = [write_panel(panel, cfg.path("panel", args.output)),
               _io.write_csv(report.to_frame(), cfg.path("validation"))]
    if not report.ok:
        raise ValidationFailed(len(report.violations))
    return written


def cmd_greenness(cfg: RunConfig, args) -> list:
    mask = read_mask(cfg.path("mask", args.mask))
    green_path = args.green_classes or cfg.green_classes or cfg.path("green_classes")
    green = load_green_classes(green_path) if Path(green_path).is_file() else default_green_classes()
    codes = load_class_table()["code"]
    table = load_municipalities(cfg.path("municipalities", args.municipalities))
    landcover = dict(_parse_landcover(args.landcover)) if args.landcover else {
        y: cfg.out_dir / f"landcover_{y}.grid" for y in GREENNESS_YEARS}

    frames, rgs_by_year = [], {}
    for year, path in sorted(landcover.items()):
        rgs = compute_all_rgs(read_landcover(path), mask, green, code_table=codes)
        rgs_by_year[year] = rgs
        frames.append(rgs.assign(year=year))
    muni_rgs = pd.concat(frames, ignore_index=True)
    muni_rgs = muni_rgs[["municipality_id", "year", "n_cells", "n_green", "rgs", "rgs_percent"]]
    district = district_greenness(rgs_by_year, table)

    panel = load_panel(cfg.path("panel", args.panel), municipalities=table)
    if len(panel) == 0:
        raise EmptyPanel("panel has no rows")
    panel, district = attach_greenness(panel, district)
    return [_io.write_csv(muni_rgs.sort_values(["municipality_id", "year"], kind="mergesort"), cfg.path("rgs")),
            _io.write_csv(district.sort_values(["district_id", "year"], kind="mergesort"),
                          cfg.path("district_rgs")),
            write_panel(panel, cfg.path("panel_green", args.output))]


def _parse_landcover(items):
    for item in items:
        if "=" not in item:
            raise InvalidParameter(f"--landcover expects YEAR=PATH, got {item!r}")
        year, path = item.split("=", 1)
        yield int(year), Path(path)


def _load_specs(cfg: RunConfig, override=None) -> list:
    path = override or cfg.models or cfg.path("models")
    if Path(path).is_file():
        return load_model_specs(path)
    log.info("no model file at %s; using the built-in table specifications", path)
    return list(PUBLISHED_MODELS)


def _default_panel(cfg: RunConfig, override=None) -> Path:
    if override:
        return Path(override)
    green = cfg.path("panel_green")
    return green if green.is_file() else cfg.path("panel")


def cmd_regress(cfg: RunConfig, args) -> list:
    panel = load_panel(_default_panel(cfg, args.panel))
    if len(panel) == 0:
        raise EmptyPanel("panel has no rows")
    specs = _load_specs(cfg, args.models)
    if args.model:
        specs = [s for s in specs if s.name in args.model]
        if not specs:
            raise InvalidParameter(f"no model named {args.model}")
    fits = []
    for spec in specs:
        try:
            fits.append(fit_model(panel, spec, vcov=cfg.vcov))
        except HeatPanelError as exc:
            raise type(exc)(f"model {spec.name}: {exc}") from exc

    outputs = {}
    tables = {}
    for spec, fit in zip(specs, fits):
        tables.setdefault(spec.table or "models", []).append(fit)
    for table, group in tables.items():
        outputs[cfg.out_dir / f"regression_{table}.txt"] = regression_table(group)
        outputs[cfg.out_dir / f"regression_{table}.csv"] = _io.frame_to_csv_bytes(coefficient_frame(group))
    outputs[cfg.path("fit_stats")] = _io.frame_to_csv_bytes(statistics_frame(fits))
    outputs[cfg.path("fits")] = json.dumps([f.to_dict() for f in fits], indent=2, sort_keys=True) + "\n"
    return [_io.atomic_write(p, data) for p, data in outputs.items()]


def cmd_margins(cfg: RunConfig, args) -> list:
    fits = {d["name"]: d for d in json.loads(cfg.path("fits", args.fits).read_text(encoding="utf-8"))}
    if args.model not in fits:
        raise InvalidParameter(f"no fit named {args.model!r} in {cfg.path('fits', args.fits)}")
    fit = FitResult.from_dict(fits[args.model])
    if args.at:
        at = np.array([float(v) for v in args.at.split(",")])
    else:
        # moderator spread over the estimation sample of this model
        obs = load_panel(_default_panel(cfg, args.panel)).observations
        spec = {s.name: s for s in _load_specs(cfg, args.models)}.get(args.model)
        cols = [c for c in (spec.regressors + (spec.response,) if spec else (args.moderator,)) if c in obs]
        mean, sd = sample_moments(obs.dropna(subset=cols)[args.moderator], args.moderator)
        at = np.linspace(mean - 2.0 * sd, mean + 2.0 * sd, args.points)
    effects = marginal_effect(fit, args.focal, args.moderator, at, level=cfg.level, dist=args.dist)
    frame = margins_frame(effects)[MARGINS_COLUMNS]
    return [_io.write_csv(frame, cfg.path("margins", args.output))]


def cmd_forecast(cfg: RunConfig, args) -> list:
    rows = load_scenarios(cfg.path("scenarios", args.scenarios))
    points = vulnerability_points(rows, target_year=cfg.target_year)
    return [_io.write_csv(points, cfg.path("points", args.output))]


def cmd_rank(cfg: RunConfig, args) -> list:
    points = pd.read_csv(cfg.path("points", args.points), dtype={"district_id": str})
    base = points[points["scenario"] == "BASELINE"]
    wanted = [cfg.scenario.upper()] if cfg.scenario else [s for s in SCENARIOS[1:] if (points["scenario"] == s).any()]
    outputs = {}
    for name in wanted:
        proj = points[points["scenario"] == name]
        if proj.empty:
            raise InvalidParameter(f"no {name} rows in {cfg.path('points', args.points)}")
        outputs[cfg.out_dir / f"shift_{name.lower()}.csv"] = _io.frame_to_csv_bytes(shift_table(base, proj))
    return [_io.atomic_write(p, data) for p, data in outputs.items()]


STAGES = {
    "synthesize": (cmd_synthesize, "write a synthetic input bundle"),
    "indicators": (cmd_indicators, "weekly heat indicators per municipality"),
    "aggregate": (cmd_aggregate, "population-weighted district-week panel"),
    "greenness": (cmd_greenness, "residential green share and standardized district greenness"),
    "regress": (cmd_regress, "fixed-effects regressions and tables"),
    "margins": (cmd_margins, "marginal effects of an interacted regressor"),
    "forecast": (cmd_forecast, "standardized heat-age vulnerability points"),
    "rank": (cmd_rank, "baseline-to-scenario shift tables"),
}


# ---------------------------------------------------------------------------
# parser

def _global_options(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="flat key = value settings file")
    parser.add_argument("--out", dest="out_dir", default=default, help="working directory (inputs and outputs)")
    parser.add_argument("--seed", type=int, default=default, help="random seed for synthesize")
    parser.add_argument("--level", type=float, default=default, help="confidence level for margins")
    parser.add_argument("--vcov", default=default,
                        help="iid | hc1 | cluster=district | cluster=district,year (overrides model files)")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatpanel", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="stage", required=True, metavar="STAGE")
    p = {}
    for name, (_, help_text) in STAGES.items():
        p[name] = sub.add_parser(name, help=help_text, description=help_text)
        _global_options(p[name], suppress=True)
        p[name].add_argument("-o", "--output", default=None, help="output file (default inside --out)")

    p["indicators"].add_argument("--grid-days")
    p["indicators"].add_argument("--cell-map")
    p["indicators"].add_argument("--municipalities")

    p["aggregate"].add_argument("--indicators")
    p["aggregate"].add_argument("--municipalities")
    p["aggregate"].add_argument("--deaths")
    p["aggregate"].add_argument("--method", choices=("weighted_mean", "max"), default="weighted_mean")

    p["greenness"].add_argument("--landcover", action="append", metavar="YEAR=PATH")
    p["greenness"].add_argument("--mask")
    p["greenness"].add_argument("--green-classes")
    p["greenness"].add_argument("--municipalities")
    p["greenness"].add_argument("--panel")

    p["regress"].add_argument("--panel")
    p["regress"].add_argument("--models", help="model specification file (INI sections)")
    p["regress"].add_argument("--model", action="append", help="fit only this model (repeatable)")

    p["margins"].add_argument("--fits")
    p["margins"].add_argument("--panel")
    p["margins"].add_argument("--models")
    p["margins"].add_argument("--model", default="table2.m2")
    p["margins"].add_argument("--focal", default="heat_days")
    p["margins"].add_argument("--moderator", default="elderly_share")
    p["margins"].add_argument("--at", help="comma-separated moderator values")
    p["margins"].add_argument("--points", type=int, default=21, help="grid size over mean +- 2 sd")
    p["margins"].add_argument("--dist", choices=("normal", "t"), default="normal")

    p["forecast"].add_argument("--scenarios")
    p["forecast"].add_argument("--target-year", type=int, default=None)

    p["rank"].add_argument("--points")
    p["rank"].add_argument("--scenario", default=None, help="RCP45 or RCP85 (default: all present)")
    return parser


def _error_message(exc: BaseException) -> str:
    name = type(exc).__name__
    msg = str(exc) if not isinstance(exc, KeyError) or isinstance(exc, HeatPanelError) else str(exc.args[0])
    return msg if msg.startswith(name) else f"{name}: {msg}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="heatpanel %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        flags = dict(out_dir=args.out_dir, seed=args.seed, level=args.level, vcov=args.vcov,
                     scenario=getattr(args, "scenario", None) if args.stage == "rank" else None,
                     target_year=getattr(args, "target_year", None))
        cfg = RunConfig.from_sources(args.config, **flags)
        if cfg.synth and args.stage != "synthesize":
            raise InvalidParameter(f"unknown config key(s): {sorted(cfg.synth)}")
        func, _ = STAGES[args.stage]
        for path in func(cfg, args):
            log.info("wrote %s", path)
    except ValidationFailed as exc:
        print(f"heatpanel {args.stage}: {exc}; see {FILES['validation']}", file=sys.stderr)
        return EXIT_INVALID
    except (HeatPanelError, OSError, ValueError, KeyError) as exc:
        print(f"heatpanel {args.stage}: {_error_message(exc)}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
