"""Design matrices built from a panel and a :class:`ModelSpec`."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from ..exceptions import RankWouldBeZero, UnknownColumn
from ..panel import PanelDataset
from ..validation import group_codes
from .spec import CLUSTER_DIMENSIONS, DIMENSION_COLUMNS, ModelSpec


@dataclass(frozen=True)
class DesignMatrix:
    """Regression inputs after listwise deletion.

    ``X``/``y`` may be fixed-effect demeaned (see ``absorbed``); ``X_raw`` and
    ``y_raw`` always hold the untransformed values.  ``fe`` and ``clusters``
    map a dimension name to integer group codes aligned with the rows.
    """

    X: np.ndarray
    y: np.ndarray
    columns: tuple
    response: str = "y"
    fe: dict = field(default_factory=dict)
    clusters: dict = field(default_factory=dict)
    rows: np.ndarray | None = None
    intercept: bool = False
    X_raw: np.ndarray | None = None
    y_raw: np.ndarray | None = None
    fe_labels: dict = field(default_factory=dict)
    absorbed: tuple = ()
    df_fe: int = 0
    n_sweeps: int = 0
    missing: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.X_raw is None:
            object.__setattr__(self, "X_raw", X)
        if self.y_raw is None:
            object.__setattr__(self, "y_raw", self.y)
        if self.rows is None:
            object.__setattr__(self, "rows", np.arange(len(self.y)))

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def shape(self):
        return self.X.shape

    def with_arrays(self, **changes) -> "DesignMatrix":
        return replace(self, **changes)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.X, columns=list(self.columns))


def _frame(data) -> pd.DataFrame:
    if isinstance(data, PanelDataset):
        return data.observations
    if isinstance(data, pd.DataFrame):
        return data
    raise TypeError(f"expected PanelDataset or DataFrame, got {type(data).__name__}")


def _dimension_column(frame, dim):
    for col in (DIMENSION_COLUMNS.get(dim, dim), dim):
        if col in frame.columns:
            return col
    raise UnknownColumn(DIMENSION_COLUMNS.get(dim, dim))


def build_design(data, spec: ModelSpec) -> DesignMatrix:
    """Assemble response, regressors and interaction products for ``spec``.

    Rows with a missing value in any used column are dropped (listwise); the
    per-column missing counts are kept in ``DesignMatrix.missing``.  The
    input frame is never modified.

    Raises
    ------
    UnknownColumn
        A referenced column is absent.
    RankWouldBeZero
        No design columns, or no more rows than columns after deletion.
    """
    frame = _frame(data)
    needed = [spec.response] + list(spec.regressors)
    for a, b in spec.interactions:
        needed += [a, b]
    for col in needed:
        if col not in frame.columns:
            raise UnknownColumn(col)
    fe_cols = {dim: _dimension_column(frame, dim) for dim in spec.fixed_effects}
    cluster_cols = {}
    for dim in CLUSTER_DIMENSIONS:
        try:
            cluster_cols[dim] = _dimension_column(frame, dim)
        except UnknownColumn:
            if dim in spec.vcov[1]:
                raise

    used = list(dict.fromkeys(needed + list(fe_cols.values()) + list(cluster_cols.values())))
    sub = frame[used]
    isna = sub.isna()
    missing = {c: int(n) for c, n in isna.sum().items() if n}
    keep = ~isna.any(axis=1).to_numpy()
    sub = sub[keep]
    rows = np.flatnonzero(keep)

    cols, names = [], []
    n = len(sub)
    if spec.include_intercept:
        cols.append(np.ones(n))
        names.append("const")
    for r in spec.regressors:
        cols.append(sub[r].to_numpy(dtype=float))
        names.append(r)
    for a, b in spec.interactions:
        cols.append(sub[a].to_numpy(dtype=float) * sub[b].to_numpy(dtype=float))
        names.append(f"{a}:{b}")
    if not cols:
        raise RankWouldBeZero("model has no design columns")
    X = np.column_stack(cols) if n else np.empty((0, len(cols)))
    if n <= len(names):
        raise RankWouldBeZero(f"{n} usable observations for {len(names)} design columns")

    fe, fe_labels = {}, {}
    for dim, col in fe_cols.items():
        fe[dim], fe_labels[dim] = group_codes(sub[col].to_numpy())
    clusters = {dim: group_codes(sub[col].to_numpy())[0] for dim, col in cluster_cols.items()}
    y = sub[spec.response].to_numpy(dtype=float)
    return DesignMatrix(X, y, tuple(names), spec.response, fe, clusters, rows, spec.include_intercept,
                        fe_labels=fe_labels, missing=missing)
