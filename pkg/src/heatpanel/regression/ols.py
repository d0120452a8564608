"""Least squares by pivoted QR, and the fitted-model container."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats

from ..exceptions import PerfectCollinearityAll
from .design import DesignMatrix

COLLINEARITY_TOL = 1e-10


@dataclass
class FitResult:
    """Estimated linear model.

    ``vcov_matrix`` is filled by :func:`heatpanel.regression.vcov.variance_estimator`
    (``fit_model`` does so automatically).  ``bread`` is ``(X'X)^-1`` of the
    retained design columns.
    """

    coefficients: pd.Series
    vcov_matrix: pd.DataFrame | None
    n_obs: int
    residuals: np.ndarray
    dropped_columns: tuple = ()
    r2: float = float("nan")
    within_r2: float = float("nan")
    df_model: int = 0
    vcov_kind: tuple = ("iid", ())
    fixed_effects: tuple = ()
    response: str = ""
    name: str = ""
    bread: np.ndarray | None = field(default=None, repr=False)
    n_clusters: dict = field(default_factory=dict)

    @property
    def params(self) -> pd.Series:
        return self.coefficients

    @property
    def names(self) -> list:
        return list(self.coefficients.index)

    @property
    def df_resid(self) -> int:
        return self.n_obs - self.df_model

    @property
    def std_errors(self) -> pd.Series:
        return pd.Series(np.sqrt(np.clip(np.diag(self.vcov_matrix.to_numpy()), 0.0, None)),
                         index=self.coefficients.index)

    @property
    def zvalues(self) -> pd.Series:
        return self.coefficients / self.std_errors

    @property
    def pvalues(self) -> pd.Series:
        """Two-sided p-values from the normal distribution."""
        return pd.Series(2.0 * stats.norm.sf(np.abs(self.zvalues.to_numpy())), index=self.coefficients.index)

    def conf_int(self, level: float = 0.95, dist: str = "normal") -> pd.DataFrame:
        crit = critical_value(level, dist, self.df_resid)
        se = self.std_errors
        return pd.DataFrame({"lower": self.coefficients - crit * se, "upper": self.coefficients + crit * se})

    def to_dict(self) -> dict:
        from .spec import format_vcov

        return {
            "name": self.name,
            "response": self.response,
            "coefficients": {k: float(v) for k, v in self.coefficients.items()},
            "vcov": self.vcov_matrix.to_numpy().tolist() if self.vcov_matrix is not None else None,
            "vcov_kind": format_vcov(self.vcov_kind),
            "n_obs": int(self.n_obs),
            "df_model": int(self.df_model),
            "r2": float(self.r2),
            "within_r2": None if np.isnan(self.within_r2) else float(self.within_r2),
            "dropped_columns": list(self.dropped_columns),
            "fixed_effects": list(self.fixed_effects),
            "n_clusters": {k: int(v) for k, v in self.n_clusters.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        from .spec import parse_vcov

        names = list(d["coefficients"])
        coef = pd.Series([d["coefficients"][k] for k in names], index=names, dtype=float)
        vcov = None if d.get("vcov") is None else pd.DataFrame(np.asarray(d["vcov"], dtype=float),
                                                                  index=names, columns=names)
        within = d.get("within_r2")
        return cls(coef, vcov, int(d.get("n_obs", 0)), np.empty(0), tuple(d.get("dropped_columns", ())),
                   float(d.get("r2", np.nan)), np.nan if within is None else float(within),
                   int(d.get("df_model", len(names))), parse_vcov(d.get("vcov_kind", "iid")),
                   tuple(d.get("fixed_effects", ())), d.get("response", ""), d.get("name", ""),
                   n_clusters=dict(d.get("n_clusters", {})))

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_estimates(cls, coefficients: dict, vcov, n_obs: int = 0, name: str = "") -> "FitResult":
        """Wrap externally supplied estimates (e.g. published coefficients)."""
        names = list(coefficients)
        coef = pd.Series([coefficients[k] for k in names], index=names, dtype=float)
        V = pd.DataFrame(np.asarray(vcov, dtype=float), index=names, columns=names)
        return cls(coef, V, n_obs, np.empty(0), df_model=len(names), name=name)


def critical_value(level: float, dist: str = "normal", df: int | None = None) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    q = 0.5 + level / 2.0
    if dist == "normal":
        return float(stats.norm.ppf(q))
    if dist == "t":
        if not df or df <= 0:
            raise ValueError("t critical values need positive residual degrees of freedom")
        return float(stats.t.ppf(q, df))
    raise ValueError(f"unknown distribution {dist!r}")


def rank_revealing_columns(X: np.ndarray, tol: float = COLLINEARITY_TOL) -> np.ndarray:
    """Indices (ascending) of a maximal set of linearly independent columns.

    Column-pivoted QR; a pivot whose magnitude is below ``tol`` times the
    leading pivot marks the rest of the columns as dependent.
    """
    if X.shape[1] == 0:
        return np.array([], dtype=int)
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or not diag[0] > 0:
        return np.array([], dtype=int)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def fit_ols(design: DesignMatrix, tol: float = COLLINEARITY_TOL) -> FitResult:
    """Minimise the residual sum of squares of ``design``.

    Collinear columns are dropped (named in ``dropped_columns``) and the
    remaining system is solved through its QR factorisation.  Fit statistics
    and the variance matrix are left for :func:`fit_statistics` and
    :func:`~heatpanel.regression.vcov.variance_estimator`.

    Raises
    ------
    PerfectCollinearityAll
        If no column is estimable.
    """
    X, y = design.X, design.y
    keep = rank_revealing_columns(X, tol)
    if keep.size == 0:
        raise PerfectCollinearityAll("no estimable design columns (all zero or collinear)")
    names = [design.columns[i] for i in keep]
    dropped = tuple(c for i, c in enumerate(design.columns) if i not in set(keep.tolist()))

    Q, R = scipy.linalg.qr(X[:, keep], mode="economic")
    beta = scipy.linalg.solve_triangular(R, Q.T @ y)
    Rinv = scipy.linalg.solve_triangular(R, np.eye(R.shape[0]))
    bread = Rinv @ Rinv.T
    resid = y - X[:, keep] @ beta

    return FitResult(
        coefficients=pd.Series(beta, index=names),
        vcov_matrix=None,
        n_obs=design.n_obs,
        residuals=resid,
        dropped_columns=dropped,
        df_model=len(names) + design.df_fe,
        fixed_effects=design.absorbed,
        response=design.response,
        bread=bread,
    )


def fit_statistics(fit: FitResult, design: DesignMatrix, fe_dims=None) -> tuple[float, float]:
    """``(r2, within_r2)``.

    ``r2`` compares the residual sum of squares with the total sum of
    squares of the raw response (centred when the model has an intercept or
    fixed effects); ``within_r2`` uses the fixed-effect demeaned response and
    is NaN without fixed effects.
    """
    fe_dims = design.absorbed if fe_dims is None else tuple(fe_dims)
    rss = float(fit.residuals @ fit.residuals)
    y_raw = design.y_raw
    centred = design.intercept or bool(fe_dims)
    dev = y_raw - y_raw.mean() if centred else y_raw
    tss = float(dev @ dev)
    r2 = 1.0 - rss / tss if tss > 0 else float("nan")
    within = float("nan")
    if fe_dims:
        tss_w = float(design.y @ design.y)
        within = 1.0 - rss / tss_w if tss_w > 0 else float("nan")
    return float(np.clip(r2, 0.0, 1.0)), float(np.clip(within, 0.0, 1.0)) if fe_dims else within
