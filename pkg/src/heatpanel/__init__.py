"""District heat-mortality panel toolkit.

Heat indicators from gridded temperatures, population-weighted district
aggregation, residential green share, fixed-effects regressions with
robust and clustered covariances, interaction marginal effects and
scenario vulnerability ranking.
"""

from .aggregation import WeightedSeries, aggregate_panel, population_weighted_mean
from .exceptions import HeatPanelError
from .forecast import VulnerabilityRanker, baseline_moments, percentile_rank, shift_table, vulnerability_score
from .greenness import GreennessStandardizer, LandcoverGrid, ResidentialMask, compute_rgs, standardize
from .heat import classify_day, compute_weekly_indicators, municipality_daily_extrema, weekly_indicators
from .margins import marginal_effect, moderator_grid
from .panel import PanelDataset, load_panel, validate_panel, write_panel
from .regression import PUBLISHED_MODELS, FitResult, ModelSpec, PanelOLS, fit_model, regression_table, variance_estimator
from .synth import SynthParams, simulate_panel, synthesize_bundle

__version__ = "0.1.0"

__all__ = [
    "FitResult", "GreennessStandardizer", "HeatPanelError", "LandcoverGrid", "ModelSpec", "PUBLISHED_MODELS",
    "PanelDataset", "PanelOLS", "ResidentialMask", "SynthParams", "VulnerabilityRanker", "WeightedSeries",
    "aggregate_panel", "baseline_moments", "classify_day", "compute_rgs", "compute_weekly_indicators",
    "fit_model", "load_panel", "marginal_effect", "moderator_grid", "municipality_daily_extrema",
    "percentile_rank", "population_weighted_mean", "regression_table", "shift_table", "simulate_panel",
    "standardize", "synthesize_bundle", "validate_panel", "variance_estimator", "vulnerability_score",
    "weekly_indicators", "write_panel",
]
