import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
HOUSING_CSV = Path(os.environ.get("TUBEREGRESS_DATA", ROOT / "data" / "california_housing.csv"))


@pytest.fixture(scope="session")
def fixture_ds():
    from tuberegress.dataset import load_fixture

    return load_fixture()


@pytest.fixture(scope="session")
def housing():
    if not HOUSING_CSV.is_file():
        pytest.skip(f"housing CSV not found at {HOUSING_CSV} (run scripts/fetch_data.py)")
    from tuberegress.dataset import load_csv

    return load_csv(HOUSING_CSV, "MedHouseVal")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def criterion(request):
    """Record one PASS/FAIL/SKIP line per acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def check(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{text} [{'ok' if passed else 'FAIL'}]" for text, passed in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    def skip(number, title, reason):
        lines.append(f"SKIP criterion {number:>2}: {title}: {reason}")
        pytest.skip(reason)

    check.skip = skip
    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
