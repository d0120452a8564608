import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatpanel.exceptions import DuplicateKey, MissingColumn, ParseError
from heatpanel.panel import (
    PANEL_COLUMNS,
    PanelDataset,
    load_municipalities,
    load_panel,
    validate_panel,
    write_panel,
)

HEADER = ",".join(PANEL_COLUMNS)


def _row(district="D1", year=2020, month=7, week=28, deaths=0.21, heat=1, wave=0, trop=0):
    return f"{district},{year},{month},{week},{deaths},{heat},{wave},{trop},20.5,0.3,2.9,7.5,0.4"


def _write(tmp_path, rows, name="panel.csv"):
    path = tmp_path / name
    path.write_text(HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def test_six_row_csv_loads(tmp_path):
    rows = [_row(district=d, week=w) for d in ("D1", "D2") for w in (27, 28, 29)]
    panel = load_panel(_write(tmp_path, rows))
    assert len(panel) == 6
    assert list(panel.observations.columns) == list(PANEL_COLUMNS)
    assert panel.observations["year"].dtype == np.int64


def test_duplicate_key_names_both_rows(tmp_path):
    path = _write(tmp_path, [_row(), _row(week=29), _row()])
    with pytest.raises(DuplicateKey) as err:
        load_panel(path)
    assert err.value.rows == [2, 4]


def test_missing_column(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("district_id,year\nD1,2020\n", encoding="utf-8")
    with pytest.raises(MissingColumn) as err:
        load_panel(path)
    assert "week_index" in str(err.value)


def test_parse_error_reports_row_and_column(tmp_path):
    path = _write(tmp_path, [_row(), _row(week=29).replace(",29,", ",x,")])
    with pytest.raises(ParseError) as err:
        load_panel(path)
    assert (err.value.row, err.value.column) == (3, "week_index")


def test_schema_maps_file_columns(tmp_path):
    path = _write(tmp_path, [_row()])
    text = path.read_text().replace("deaths_per_1k", "mortality")
    path.write_text(text)
    panel = load_panel(path, schema={"deaths_per_1k": "mortality"})
    assert panel.observations["deaths_per_1k"].iloc[0] == 0.21


def test_blank_response_is_kept_missing(tmp_path):
    panel = load_panel(_write(tmp_path, [_row(deaths="")]))
    assert np.isnan(panel.observations["deaths_per_1k"].iloc[0])


def test_conforming_panel_has_empty_report(tmp_path):
    panel = load_panel(_write(tmp_path, [_row(heat=3, wave=1), _row(week=29)]))
    assert validate_panel(panel).ok


def test_heat_wave_inconsistency_flagged(tmp_path):
    panel = load_panel(_write(tmp_path, [_row(heat=4, wave=0)]))
    report = validate_panel(panel)
    assert report.fields() == {"heat_wave"}
    # the oracle: recompute the flag from heat_days
    obs = panel.observations
    assert (obs["heat_wave"] != (obs["heat_days"] >= 3).astype(int)).sum() == len(report)


@pytest.mark.parametrize("kwargs, field", [
    ({"month": 5}, "month_of_year"),
    ({"deaths": -0.1}, "deaths_per_1k"),
    ({"heat": 8, "wave": 1}, "heat_days"),
    ({"trop": -1}, "tropical_nights"),
])
def test_range_violations(tmp_path, kwargs, field):
    report = validate_panel(load_panel(_write(tmp_path, [_row(**kwargs)])))
    assert field in report.fields()
    assert report.to_frame().shape[0] == len(report)


def test_unknown_district_flagged(tmp_path):
    table = pd.DataFrame({"municipality_id": ["m1"], "district_id": ["D9"], "population": [10]})
    panel = PanelDataset(load_panel(_write(tmp_path, [_row()])).observations, table)
    assert validate_panel(panel).fields() == {"district_id"}


def test_municipality_assigned_to_two_districts(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("municipality_id,district_id,population\nm1,D1,10\nm1,D2,10\n")
    with pytest.raises(DuplicateKey):
        load_municipalities(path)


def test_panel_is_immutable_view():
    panel = PanelDataset(pd.DataFrame({"district_id": ["D1"], "year": [2020], "week_index": [28]}))
    frame = panel.to_frame()
    frame.loc[0, "year"] = 1999
    assert panel.observations.loc[0, "year"] == 2020


finite = st.floats(min_value=0, max_value=1e4, allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(st.integers(2000, 2030), st.integers(1, 53), finite, st.integers(0, 7)),
                min_size=1, max_size=20, unique_by=lambda t: (t[0], t[1])))
def test_round_trip(tmp_path_factory, rows):
    frame = pd.DataFrame({
        "district_id": "D1",
        "year": [r[0] for r in rows],
        "month_of_year": 7,
        "week_index": [r[1] for r in rows],
        "deaths_per_1k": [r[2] for r in rows],
        "heat_days": [float(r[3]) for r in rows],
        "heat_wave": [int(r[3] >= 3) for r in rows],
        "tropical_nights": 0.0,
    })
    path = tmp_path_factory.mktemp("rt") / "panel.csv"
    write_panel(frame, path)
    back = load_panel(path).observations
    expected = PanelDataset(frame).observations.sort_values(["year", "week_index"]).reset_index(drop=True)
    pd.testing.assert_frame_equal(back, expected, check_dtype=False)
