"""High-level fitting: :func:`fit_model` and the scikit-learn style :class:`PanelOLS`."""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import NoConvergence, UnknownColumn
from ..panel import PanelDataset
from .absorb import absorb_fixed_effects
from .design import DesignMatrix, build_design
from .ols import FitResult, fit_ols, fit_statistics
from .spec import DIMENSION_COLUMNS, ModelSpec, parse_vcov
from .vcov import n_clusters, variance_estimator


def fit_design(design: DesignMatrix, vcov="iid", tol: float = 1e-10, max_iter: int = 1000,
               absorb_method: str = "auto") -> tuple[FitResult, DesignMatrix]:
    """Absorb fixed effects, solve, and attach variance and fit statistics."""
    within = absorb_fixed_effects(design, tol=tol, max_iter=max_iter, method=absorb_method)
    fit = fit_ols(within)
    fit.vcov_matrix = variance_estimator(fit, within, vcov)
    fit.vcov_kind = parse_vcov(vcov)
    fit.n_clusters = n_clusters(within, vcov)
    fit.r2, fit.within_r2 = fit_statistics(fit, within)
    return fit, within


def fit_model(data, spec: ModelSpec, vcov=None, **kwargs) -> FitResult:
    """Fit ``spec`` on a panel; ``vcov`` overrides the model's estimator."""
    design = build_design(data, spec)
    fit, _ = fit_design(design, spec.vcov if vcov is None else vcov, **kwargs)
    fit.name = spec.name
    return fit


def recover_fixed_effects(resid_total, codes_list, tol=1e-12, max_iter=1000):
    """Split ``resid_total`` (response minus slope part) into per-level effects.

    Backfitting: each dimension's effects are the group means of what the
    other dimensions leave over.  Effects are identified only up to
    normalisation; their sum at every observation is unique.
    """
    effects = [np.zeros(int(c.max()) + 1) for c in codes_list]
    counts = [np.bincount(c, minlength=len(e)) for c, e in zip(codes_list, effects)]
    for _ in range(max_iter):
        change = 0.0
        for j, codes in enumerate(codes_list):
            other = sum((effects[i][c] for i, c in enumerate(codes_list) if i != j), np.zeros(len(codes)))
            new = np.bincount(codes, weights=resid_total - other, minlength=len(effects[j])) / counts[j]
            change = max(change, float(np.max(np.abs(new - effects[j]))))
            effects[j] = new
        if change < tol or len(codes_list) == 1:
            return effects
    raise NoConvergence("fixed-effect recovery did not converge")


class PanelOLS(RegressorMixin, BaseEstimator):
    """Linear panel model with absorbed fixed effects and robust covariances.

    Parameters
    ----------
    regressors : sequence of str
        Columns of ``X`` entering the model linearly.
    interactions : sequence of str or pairs
        Products of two columns, e.g. ``"heat_days:elderly_share"``.
    fixed_effects : sequence of str
        Subset of ``{"district", "year", "month_of_year"}`` to absorb.
    vcov : str
        ``"iid"``, ``"hc1"``, ``"cluster=district"`` or ``"cluster=district,year"``.
    fit_intercept : bool
        Ignored when fixed effects are absorbed.
    response : str
        Column of ``X`` used as the response when ``y`` is not passed.

    Attributes
    ----------
    result_ : FitResult
    coef_ : ndarray
        Slope estimates in ``feature_names_out_`` order.
    intercept_ : float
        Constant term (0.0 with fixed effects or without an intercept).
    fixed_effects_ : dict
        Dimension -> Series of level effects (used by :meth:`predict`).

    Examples
    --------
    >>> model = PanelOLS(regressors=["heat_days"], fixed_effects=["year", "month_of_year", "district"],
    ...                  vcov="cluster=district,year")        # doctest: +SKIP
    >>> model.fit(panel.observations).result_.coefficients  # doctest: +SKIP
    """

    def __init__(self, regressors=(), interactions=(), fixed_effects=(), vcov="iid", fit_intercept=True,
                 response="deaths_per_1k", tol=1e-10, max_iter=1000, absorb_method="auto"):
        self.regressors = regressors
        self.interactions = interactions
        self.fixed_effects = fixed_effects
        self.vcov = vcov
        self.fit_intercept = fit_intercept
        self.response = response
        self.tol = tol
        self.max_iter = max_iter
        self.absorb_method = absorb_method

    def _spec(self) -> ModelSpec:
        return ModelSpec(response=self.response, regressors=tuple(self.regressors),
                         interactions=tuple(self.interactions), fixed_effects=tuple(self.fixed_effects),
                         vcov=self.vcov, include_intercept=self.fit_intercept)

    def _frame(self, X, y=None) -> pd.DataFrame:
        if isinstance(X, PanelDataset):
            X = X.observations
        if not isinstance(X, pd.DataFrame):
            raise TypeError("PanelOLS needs a DataFrame (or PanelDataset) with named columns")
        if y is None:
            return X
        if isinstance(y, str):
            if y not in X.columns:
                raise UnknownColumn(y)
            return X.assign(**{self.response: X[y]})
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(y) != len(X):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
        return X.assign(**{self.response: y})

    def fit(self, X, y=None):
        spec = self._spec()
        frame = self._frame(X, y)
        design = build_design(frame, spec)
        fit, within = fit_design(design, spec.vcov, self.tol, self.max_iter, self.absorb_method)
        self.spec_ = spec
        self.result_ = fit
        self.design_ = within
        self.feature_names_out_ = np.array([c for c in fit.names if c != "const"], dtype=object)
        self.coef_ = fit.coefficients[list(self.feature_names_out_)].to_numpy()
        self.intercept_ = float(fit.coefficients.get("const", 0.0))
        self.n_features_in_ = len(spec.regressors)

        self.fixed_effects_ = {}
        if spec.fixed_effects:
            slope = design.X_raw[:, [design.columns.index(c) for c in fit.names]] @ fit.coefficients.to_numpy()
            codes = [design.fe[d] for d in spec.fixed_effects]
            effects = recover_fixed_effects(design.y_raw - slope - fit.residuals, codes, max_iter=10 * self.max_iter)
            for dim, eff in zip(spec.fixed_effects, effects):
                self.fixed_effects_[dim] = pd.Series(eff, index=design.fe_labels[dim])
        return self

    def _slope_part(self, frame) -> np.ndarray:
        out = np.full(len(frame), self.intercept_)
        for name, b in zip(self.feature_names_out_, self.coef_):
            if ":" in name:
                a, c = name.split(":")
                col = frame[a].to_numpy(dtype=float) * frame[c].to_numpy(dtype=float)
            else:
                col = frame[name].to_numpy(dtype=float)
            out = out + b * col
        return out

    def predict(self, X) -> np.ndarray:
        """Fitted values including fixed effects; unseen fixed-effect levels raise ``KeyError``."""
        check_is_fitted(self, "result_")
        frame = self._frame(X)
        pred = self._slope_part(frame)
        for dim, eff in self.fixed_effects_.items():
            col = DIMENSION_COLUMNS[dim] if DIMENSION_COLUMNS[dim] in frame.columns else dim
            labels = frame[col].to_numpy()
            unseen = ~np.isin(labels, eff.index.to_numpy())
            if unseen.any():
                raise KeyError(f"unseen {dim} level(s): {sorted(set(labels[unseen].tolist()))[:5]}")
            pred = pred + eff.reindex(labels).to_numpy()
        return pred

    def conf_int(self, level=0.95, dist="normal") -> pd.DataFrame:
        check_is_fitted(self, "result_")
        return self.result_.conf_int(level, dist)
