"""Conditional marginal effects of a focal regressor at moderator values.

For a model with ``b_f * f + b_m * m + b_i * f * m`` the effect of one more
unit of ``f`` at moderator value ``m`` is ``b_f + b_i * m``; its delta-method
variance is ``Var(b_f) + m^2 Var(b_i) + 2 m Cov(b_f, b_i)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from .exceptions import MissingInteractionTerm, UnknownColumn
from .panel import PanelDataset
from .regression.ols import FitResult, critical_value
from .validation import sample_moments

DEFAULT_LEVEL = 0.90
MARGINS_COLUMNS = ["at_value", "estimate", "ci_low", "ci_high", "std_error", "focal", "moderator", "level"]


@dataclass(frozen=True)
class MarginalEffect:
    focal: str
    moderator: str
    at_value: float
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    level: float = DEFAULT_LEVEL


def interaction_term(fit: FitResult, focal: str, moderator: str) -> str:
    for name in (f"{focal}:{moderator}", f"{moderator}:{focal}"):
        if name in fit.coefficients.index:
            return name
    raise MissingInteractionTerm(f"fit has no interaction between {focal!r} and {moderator!r}")


def marginal_effect(fit: FitResult, focal: str, moderator: str, at_values, level: float = DEFAULT_LEVEL,
                    dist: str = "normal") -> list[MarginalEffect]:
    """Effect of ``focal`` evaluated at each moderator value in ``at_values``.

    ``dist="t"`` switches to t critical values with the fit's residual
    degrees of freedom.
    """
    if focal not in fit.coefficients.index:
        raise MissingInteractionTerm(f"fit has no coefficient for {focal!r}")
    inter = interaction_term(fit, focal, moderator)
    b_f, b_i = float(fit.coefficients[focal]), float(fit.coefficients[inter])
    V = fit.vcov_matrix
    v_ff, v_ii, v_fi = float(V.loc[focal, focal]), float(V.loc[inter, inter]), float(V.loc[focal, inter])
    crit = critical_value(level, dist, fit.df_resid)
    out = []
    for m in np.asarray(at_values, dtype=float).reshape(-1):
        est = float(b_f + b_i * m)
        var = v_ff + m * m * v_ii + 2.0 * m * v_fi
        se = float(np.sqrt(max(var, 0.0)))
        out.append(MarginalEffect(focal, moderator, float(m), est, se, est - crit * se, est + crit * se, level))
    return out


def moderator_grid(data, moderator: str) -> np.ndarray:
    """``[mean - 2 sd, mean, mean + 2 sd]`` of the moderator (n-1 standard deviation)."""
    if isinstance(data, PanelDataset):
        data = data.observations
    if isinstance(data, pd.DataFrame):
        if moderator not in data.columns:
            raise UnknownColumn(moderator)
        values = data[moderator].dropna().to_numpy(dtype=float)
    else:
        values = np.asarray(data, dtype=float)
    mean, sd = sample_moments(values, moderator)
    return np.array([mean - 2.0 * sd, mean, mean + 2.0 * sd])


def margins_frame(effects) -> pd.DataFrame:
    return pd.DataFrame([asdict(e) for e in effects], columns=MARGINS_COLUMNS)
