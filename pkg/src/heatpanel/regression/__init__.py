"""Linear panel models with absorbed fixed effects and sandwich covariances."""

from .absorb import absorb_fixed_effects, demean, dummy_projection
from .design import DesignMatrix, build_design
from .estimator import PanelOLS, fit_design, fit_model
from .ols import FitResult, critical_value, fit_ols, fit_statistics
from .report import coefficient_frame, regression_table, statistics_frame
from .spec import PUBLISHED_MODELS, ModelSpec, load_model_specs, parse_model_specs, parse_vcov
from .vcov import (
    cluster_vcov,
    hc1_vcov,
    iid_vcov,
    psd_truncate,
    two_way_components,
    two_way_vcov,
    variance_estimator,
)

__all__ = [
    "DesignMatrix", "FitResult", "ModelSpec", "PUBLISHED_MODELS", "PanelOLS",
    "absorb_fixed_effects", "build_design", "cluster_vcov", "coefficient_frame", "critical_value",
    "demean", "dummy_projection", "fit_design", "fit_model", "fit_ols", "fit_statistics",
    "hc1_vcov", "iid_vcov", "load_model_specs", "parse_model_specs", "parse_vcov", "psd_truncate",
    "regression_table", "statistics_frame", "two_way_components", "two_way_vcov", "variance_estimator",
]
