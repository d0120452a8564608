import numpy as np
import pytest

from heatpanel.exceptions import InvalidParameter
from heatpanel.panel import PANEL_COLUMNS
from heatpanel.regression import ModelSpec, fit_model
from heatpanel.synth import SynthParams, make_rng, simulate_panel, summer_weeks

ALL_FE = ("district", "year", "month_of_year")


def test_full_scale_shape():
    panel = simulate_panel(SynthParams(n_districts=94), make_rng(1))
    assert list(panel.columns) == list(PANEL_COLUMNS)
    assert len(panel) == 94 * 8 * 13
    assert (panel["heat_wave"] == (panel["heat_days"] >= 3)).all()


def test_null_effect_without_noise_gives_zero_slope():
    params = SynthParams(beta_heat=0.0, noise_sd=0.0)
    fit = fit_model(simulate_panel(params, make_rng(3)), ModelSpec(regressors=("heat_days",), fixed_effects=ALL_FE))
    assert abs(fit.coefficients["heat_days"]) < 1e-10


def test_noise_free_slopes_are_exact():
    params = SynthParams(beta_heat=0.01, beta_elderly=0.02, beta_interaction=0.0005, noise_sd=0.0)
    spec = ModelSpec(regressors=("heat_days", "elderly_share"), interactions=("heat_days:elderly_share",),
                     fixed_effects=ALL_FE)
    coef = fit_model(simulate_panel(params, make_rng(4)), spec).coefficients
    assert np.allclose(coef, [0.01, 0.02, 0.0005], rtol=1e-8)


def test_interaction_recovered_within_two_se():
    params = SynthParams(n_districts=40, beta_interaction=0.0013, beta_heat=-0.02)
    spec = ModelSpec(regressors=("heat_days", "elderly_share"), interactions=("heat_days:elderly_share",),
                     fixed_effects=ALL_FE, vcov="hc1")
    fit = fit_model(simulate_panel(params, make_rng(5)), spec)
    term = "heat_days:elderly_share"
    assert abs(fit.coefficients[term] - 0.0013) < 2 * fit.std_errors[term]


def test_seeds():
    p = SynthParams(n_districts=3, n_years=2)
    a, b, c = (simulate_panel(p, make_rng(s)) for s in (1, 1, 2))
    assert a.equals(b)
    assert list(a.columns) == list(c.columns) and a.shape == c.shape
    assert not a["deaths_per_1k"].equals(c["deaths_per_1k"])


def test_summer_weeks():
    weeks = summer_weeks(2022)
    assert len(weeks) == 13 and weeks[0] == (22, 6)


@pytest.mark.parametrize("kwargs", [{"n_districts": 0}, {"noise_sd": -1.0}, {"heat_probability": 1.0},
                                    {"weeks_per_year": 14}])
def test_invalid_parameters(kwargs):
    with pytest.raises(InvalidParameter):
        SynthParams(**kwargs)


def test_from_mapping():
    assert SynthParams.from_mapping({"n_districts": "5", "beta_heat": "0.01"}).n_districts == 5
    with pytest.raises(InvalidParameter):
        SynthParams.from_mapping({"districts": "5"})
    with pytest.raises(InvalidParameter):
        make_rng(-1)
