"""Model specifications and their declarative text format.

A model file is INI-style, one section per model::

    [table1.m2]
    table = table1
    response = deaths_per_1k
    regressors = heat_days
    fixed_effects = month_of_year, year, district
    vcov = cluster=district,year

``regressors`` and ``interactions`` are comma separated; an interaction is
written ``a:b``.  ``intercept`` defaults to true and is ignored when fixed
effects are absorbed.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from ..exceptions import InvalidParameter

FE_DIMENSIONS = ("district", "year", "month_of_year")
CLUSTER_DIMENSIONS = ("district", "year")
# dimension -> panel column
DIMENSION_COLUMNS = {"district": "district_id", "year": "year", "month_of_year": "month_of_year"}
_FE_ALIASES = {"month": "month_of_year", "district_id": "district", "month-of-year": "month_of_year"}


def parse_vcov(kind) -> tuple:
    """Normalise a variance-estimator choice to ``(name, dims)``.

    Accepts ``"iid"``, ``"hc1"``, ``"cluster=district"``, ``"cluster:district,year"``
    or an already-normalised tuple.

    >>> parse_vcov("cluster=year,district")
    ('cluster', ('district', 'year'))
    """
    if isinstance(kind, tuple):
        name, dims = kind
        return _check_vcov(name, tuple(dims))
    text = str(kind).strip().lower().replace(" ", "")
    if text in ("iid", "hc1"):
        return text, ()
    for sep in ("=", ":"):
        if text.startswith("cluster" + sep):
            dims = tuple(d for d in text.split(sep, 1)[1].split(",") if d)
            return _check_vcov("cluster", dims)
    raise InvalidParameter(f"unknown vcov kind {kind!r}; expected iid, hc1 or cluster=<dims>")


def _check_vcov(name, dims):
    if name in ("iid", "hc1"):
        return name, ()
    if name != "cluster":
        raise InvalidParameter(f"unknown vcov kind {name!r}")
    dims = tuple(_FE_ALIASES.get(d, d) for d in dims)
    if not dims or len(dims) > 2 or len(set(dims)) != len(dims) or not set(dims) <= set(CLUSTER_DIMENSIONS):
        raise InvalidParameter(f"cluster dimensions must be a non-empty subset of {CLUSTER_DIMENSIONS}, got {dims}")
    return "cluster", tuple(d for d in CLUSTER_DIMENSIONS if d in dims)


def format_vcov(kind) -> str:
    name, dims = parse_vcov(kind)
    return name if not dims else f"cluster={','.join(dims)}"


def _split(value) -> tuple:
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return tuple(value)


@dataclass(frozen=True)
class ModelSpec:
    response: str = "deaths_per_1k"
    regressors: tuple = ()
    interactions: tuple = ()  # pairs (a, b)
    fixed_effects: tuple = ()
    vcov: tuple = ("iid", ())
    include_intercept: bool = True
    name: str = ""
    table: str = ""

    def __post_init__(self):
        pairs = []
        for inter in self.interactions:
            a, b = inter.split(":") if isinstance(inter, str) else inter
            pairs.append((a.strip(), b.strip()))
        fes = tuple(_FE_ALIASES.get(f, f) for f in _split(self.fixed_effects))
        bad = [f for f in fes if f not in FE_DIMENSIONS]
        if bad:
            raise InvalidParameter(f"unknown fixed-effect dimension(s) {bad}; choose from {FE_DIMENSIONS}")
        object.__setattr__(self, "regressors", _split(self.regressors))
        object.__setattr__(self, "interactions", tuple(pairs))
        object.__setattr__(self, "fixed_effects", fes)
        object.__setattr__(self, "vcov", parse_vcov(self.vcov))
        if fes:
            object.__setattr__(self, "include_intercept", False)

    @property
    def interaction_names(self) -> list:
        return [f"{a}:{b}" for a, b in self.interactions]

    @property
    def columns(self) -> list:
        """Design column names, in order."""
        return (["const"] if self.include_intercept else []) + list(self.regressors) + self.interaction_names

    def to_text(self) -> str:
        lines = [f"[{self.name or 'model'}]"]
        if self.table:
            lines.append(f"table = {self.table}")
        lines.append(f"response = {self.response}")
        lines.append(f"regressors = {', '.join(self.regressors)}")
        if self.interactions:
            lines.append(f"interactions = {', '.join(self.interaction_names)}")
        if self.fixed_effects:
            lines.append(f"fixed_effects = {', '.join(self.fixed_effects)}")
        lines.append(f"vcov = {format_vcov(self.vcov)}")
        if not self.fixed_effects:
            lines.append(f"intercept = {'true' if self.include_intercept else 'false'}")
        return "\n".join(lines) + "\n"


def parse_model_specs(text: str) -> list[ModelSpec]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    specs = []
    for section in parser.sections():
        s = parser[section]
        try:
            intercept = s.getboolean("intercept", fallback=True)
        except ValueError as exc:
            raise InvalidParameter(f"[{section}] intercept: {exc}") from None
        if "regressors" not in s:
            raise InvalidParameter(f"[{section}] missing 'regressors'")
        specs.append(ModelSpec(
            response=s.get("response", "deaths_per_1k"),
            regressors=s["regressors"],
            interactions=_split(s.get("interactions")),
            fixed_effects=s.get("fixed_effects", ""),
            vcov=s.get("vcov", "iid"),
            include_intercept=intercept,
            name=section,
            table=s.get("table", ""),
        ))
    return specs


def load_model_specs(path) -> list[ModelSpec]:
    return parse_model_specs(Path(path).read_text(encoding="utf-8"))


_T1 = dict(table="table1", vcov="cluster=district,year")
_T23 = dict(fixed_effects=("year", "month_of_year"), vcov="hc1")
_ALL_FE = ("month_of_year", "year", "district")
_E = "elderly_share"
_G = "greenness_z"

# Model structures of the three published regression tables
PUBLISHED_MODELS = [
    ModelSpec(regressors=("heat_days",), name="table1.m1", **_T1),
    ModelSpec(regressors=("heat_days",), fixed_effects=_ALL_FE, name="table1.m2", **_T1),
    ModelSpec(regressors=("heat_wave",), name="table1.m3", **_T1),
    ModelSpec(regressors=("heat_wave",), fixed_effects=_ALL_FE, name="table1.m4", **_T1),
    ModelSpec(regressors=("tropical_nights",), name="table1.m5", **_T1),
    ModelSpec(regressors=("tropical_nights",), fixed_effects=_ALL_FE, name="table1.m6", **_T1),
    ModelSpec(regressors=("heat_days", _E), name="table2.m1", table="table2", **_T23),
    ModelSpec(regressors=("heat_days", _E), interactions=(("heat_days", _E),), name="table2.m2",
              table="table2", **_T23),
    ModelSpec(regressors=("heat_days", _E, "income_10k"), interactions=(("heat_days", _E),),
              name="table2.m3", table="table2", **_T23),
    ModelSpec(regressors=("heat_days", _E, "income_10k", "hospital_distance_km", "altitude_km"),
              interactions=(("heat_days", _E),), name="table2.m4", table="table2", **_T23),
    ModelSpec(regressors=("heat_wave", _G), name="table3.m1", table="table3", **_T23),
    ModelSpec(regressors=("heat_wave", _G), interactions=(("heat_wave", _G),), name="table3.m2",
              table="table3", **_T23),
    ModelSpec(regressors=("heat_wave", _G, "income_10k"), interactions=(("heat_wave", _G),),
              name="table3.m3", table="table3", **_T23),
    ModelSpec(regressors=("heat_wave", _G, "income_10k", _E, "altitude_km"),
              interactions=(("heat_wave", _G),), name="table3.m4", table="table3", **_T23),
]


def published_models_text() -> str:
    return "\n".join(s.to_text() for s in PUBLISHED_MODELS)
