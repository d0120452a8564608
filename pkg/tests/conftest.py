import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance verdicts collected by tests/test_acceptance.py
ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])


@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    """Synthetic input bundle (seed 42) shared by file-level tests."""
    from heatpanel.synth import SynthParams, synthesize_bundle

    out = tmp_path_factory.mktemp("bundle")
    synthesize_bundle(SynthParams(n_districts=4, n_years=3, first_year=2019), 42, out)
    return out
