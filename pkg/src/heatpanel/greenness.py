"""Residential Green Share (RGS) from land-cover rasters, and its standardization.

RGS of a municipality is the fraction of its residential/commercial mask
cells whose land-cover class is green.  Grids arrive pre-rasterized and
aligned: a land-cover grid of integer class codes and a mask grid of the
same shape holding a municipality id per in-mask cell (``-1`` elsewhere).

Text grid format::

    width 4
    height 2
    cell_size_m 10
    10 10 50 30
    40 10 10 50
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._io import atomic_write
from .aggregation import district_weighted_mean
from .exceptions import DegenerateVariance, EmptyResidentialArea, ParseError, UnknownClassCode
from .panel import PanelDataset
from .validation import as_float_vector, sample_moments

OUTSIDE = "-1"
GREENNESS_YEARS = (2020, 2021)


def load_class_table(path=None) -> pd.DataFrame:
    """Land-cover code table with columns ``code, name, green``.

    Defaults to the shipped 11-class WorldCover table, where tree cover,
    shrubland and grassland count as green.
    """
    if path is None:
        text = resources.files("heatpanel").joinpath("data/worldcover_classes.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].split()
        if line:
            rows.append((int(line[0]), line[1], bool(int(line[2])) if len(line) > 2 else False))
    return pd.DataFrame(rows, columns=["code", "name", "green"])


def default_green_classes() -> frozenset:
    table = load_class_table()
    return frozenset(int(c) for c in table.loc[table["green"], "code"])


def load_green_classes(path) -> frozenset:
    """Green-class config: integer codes separated by whitespace or commas."""
    tokens = Path(path).read_text(encoding="utf-8").replace(",", " ")
    tokens = [t for line in tokens.splitlines() for t in line.split("#", 1)[0].split()]
    return frozenset(int(t) for t in tokens)


@dataclass(frozen=True)
class LandcoverGrid:
    classes: np.ndarray  # (height, width) int
    cell_size_m: float = 10.0

    def __post_init__(self):
        arr = np.asarray(self.classes)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("land-cover grid must be a non-empty 2-d array")
        object.__setattr__(self, "classes", arr.astype(np.int64))

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    @property
    def width(self) -> int:
        return self.classes.shape[1]


@dataclass(frozen=True)
class ResidentialMask:
    """Municipality label per cell; :data:`OUTSIDE` marks cells outside the built area."""

    labels: np.ndarray  # (height, width) str
    cell_size_m: float = 10.0

    def __post_init__(self):
        arr = np.asarray(self.labels).astype(str)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("mask must be a non-empty 2-d array")
        object.__setattr__(self, "labels", arr)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def municipalities(self) -> list:
        return sorted(set(np.unique(self.labels)) - {OUTSIDE})


@dataclass(frozen=True)
class GreennessScore:
    municipality_id: str
    rgs: float
    z_score: float | None = None

    @property
    def rgs_percent(self) -> float:
        return 100.0 * self.rgs


def _read_grid_text(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = {}
    body = []
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        if len(header) < 3 and parts[0] in ("width", "height", "cell_size_m"):
            header[parts[0]] = parts[1]
        else:
            body.extend(parts)
    try:
        width, height = int(header["width"]), int(header["height"])
        cell = float(header.get("cell_size_m", 10.0))
    except (KeyError, ValueError):
        raise ParseError(1, "header", [(1, "header", " ".join(lines[:3]))]) from None
    if width <= 0 or height <= 0 or len(body) != width * height:
        raise ParseError(4, "cells", [(4, "cells", f"expected {width}x{height} values, found {len(body)}")])
    return width, height, cell, body


def read_landcover(path) -> LandcoverGrid:
    width, height, cell, body = _read_grid_text(path)
    try:
        values = np.array([int(t) for t in body], dtype=np.int64)
    except ValueError:
        raise ParseError(4, "cells", [(4, "cells", "non-integer class code")]) from None
    return LandcoverGrid(values.reshape(height, width), cell)


def read_mask(path) -> ResidentialMask:
    width, height, cell, body = _read_grid_text(path)
    return ResidentialMask(np.array(body, dtype=str).reshape(height, width), cell)


def _grid_text(rows, cell_size_m) -> str:
    rows = np.asarray(rows)
    out = [f"width {rows.shape[1]}", f"height {rows.shape[0]}", f"cell_size_m {cell_size_m:g}"]
    out.extend(" ".join(str(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def write_landcover(grid: LandcoverGrid, path) -> Path:
    return atomic_write(path, _grid_text(grid.classes, grid.cell_size_m))


def write_mask(mask: ResidentialMask, path) -> Path:
    return atomic_write(path, _grid_text(mask.labels, mask.cell_size_m))


def _check_inputs(grid, mask, green_classes, code_table):
    if grid.classes.shape != mask.shape:
        raise ValueError(f"grid shape {grid.classes.shape} differs from mask shape {mask.shape}")
    if code_table is not None:
        codes = set(int(c) for c in code_table)
        unknown = sorted(set(np.unique(grid.classes).tolist()) - codes)
        if unknown:
            raise UnknownClassCode(f"class codes not in the code table: {unknown}")
        unknown = sorted(set(green_classes) - codes)
        if unknown:
            raise UnknownClassCode(f"green classes not in the code table: {unknown}")


def compute_rgs(grid: LandcoverGrid, mask: ResidentialMask, green_classes, municipality_id,
                code_table=None) -> GreennessScore:
    """Share of the municipality's mask cells whose class is in ``green_classes``.

    ``code_table`` (iterable of valid class codes) enables the unknown-code
    check; pass ``load_class_table()["code"]`` for the WorldCover table.
    """
    _check_inputs(grid, mask, green_classes, code_table)
    inside = mask.labels == str(municipality_id)
    n = int(inside.sum())
    if n == 0:
        raise EmptyResidentialArea(f"municipality {municipality_id!r} has no residential cells")
    green = int(np.isin(grid.classes[inside], list(green_classes)).sum())
    return GreennessScore(str(municipality_id), green / n)


def compute_all_rgs(grid: LandcoverGrid, mask: ResidentialMask, green_classes, code_table=None) -> pd.DataFrame:
    """RGS of every municipality in the mask, sorted by municipality id."""
    _check_inputs(grid, mask, green_classes, code_table)
    labels = mask.labels.ravel()
    inside = labels != OUTSIDE
    munis, codes = np.unique(labels[inside], return_inverse=True)
    is_green = np.isin(grid.classes.ravel()[inside], list(green_classes))
    n_cells = np.bincount(codes, minlength=len(munis))
    n_green = np.bincount(codes, weights=is_green.astype(float), minlength=len(munis))
    rgs = n_green / n_cells
    return pd.DataFrame({
        "municipality_id": munis.astype(str),
        "n_cells": n_cells,
        "n_green": n_green.astype(np.int64),
        "rgs": rgs,
        "rgs_percent": 100.0 * rgs,
    })


def standardize(scores, over=None) -> np.ndarray:
    """Standardize ``scores`` by the mean and n-1 standard deviation of ``over``.

    ``over`` defaults to ``scores`` itself.
    """
    scores = as_float_vector(scores, "scores")
    mean, sd = sample_moments(scores if over is None else over, "standardization sample")
    return (scores - mean) / sd


class GreennessStandardizer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Column-wise z-scoring with the n-1 standard deviation.

    Unlike :class:`sklearn.preprocessing.StandardScaler` the scale uses the
    sample (n-1) standard deviation, and constant columns are an error
    rather than silently left unscaled.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        moments = [sample_moments(X[:, j], f"column {j}") for j in range(X.shape[1])]
        self.mean_ = np.array([m for m, _ in moments])
        self.scale_ = np.array([s for _, s in moments])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = np.asarray(X, dtype=float)
        flat = X.ndim == 1
        if flat:
            X = X[:, None]
        out = (X - self.mean_) / self.scale_
        return out[:, 0] if flat else out

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        X = np.asarray(X, dtype=float)
        flat = X.ndim == 1
        out = (X[:, None] if flat else X) * self.scale_ + self.mean_
        return out[:, 0] if flat else out


def district_greenness(rgs_by_year: dict, municipality_table: pd.DataFrame) -> pd.DataFrame:
    """Population-weighted district RGS per year: columns ``district_id, year, rgs``."""
    frames = []
    for year, rgs in sorted(rgs_by_year.items()):
        per_district = district_weighted_mean(rgs, municipality_table, "rgs", year=year)
        frames.append(pd.DataFrame({"district_id": per_district.index.astype(str), "year": int(year),
                                    "rgs": per_district.to_numpy()}))
    return pd.concat(frames, ignore_index=True)


def attach_greenness(panel: PanelDataset, district_rgs: pd.DataFrame) -> tuple[PanelDataset, pd.DataFrame]:
    """Standardize district-year RGS over the district-years present in ``panel``
    and write it into the panel's ``greenness_z`` column.

    Returns the new panel and the district-year table with ``rgs`` and ``greenness_z``.
    """
    obs = panel.to_frame()
    present = obs[["district_id", "year"]].drop_duplicates()
    sample = district_rgs.merge(present, on=["district_id", "year"], how="inner")
    if len(sample) < 2:
        raise DegenerateVariance("fewer than two district-years available for standardization")
    scaler = GreennessStandardizer().fit(sample["rgs"].to_numpy())
    table = district_rgs.copy()
    table["greenness_z"] = scaler.transform(table["rgs"].to_numpy())
    obs = obs.drop(columns="greenness_z").merge(
        table[["district_id", "year", "greenness_z"]], on=["district_id", "year"], how="left"
    )
    return PanelDataset(obs, panel.municipalities, panel.provenance + "; greenness attached"), table
