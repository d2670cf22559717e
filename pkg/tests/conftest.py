import pytest

from cpimodel.data import MonthKey
from cpimodel.synthkit import generate_catalog

PRICE_START = MonthKey(2003, 7)
LAST = MonthKey(2012, 11)  # 113 monthly prices from PRICE_START
CPI_START = PRICE_START - 11


def pytest_addoption(parser):
    parser.addoption(
        "--realdata",
        action="store",
        default=None,
        help="directory with cpi.csv and prices.csv (BLS NSA CPIs, adjusted monthly closes)",
    )


@pytest.fixture(scope="session")
def realdata_dir(request):
    path = request.config.getoption("--realdata")
    if not path:
        pytest.skip("real data not supplied (use --realdata DIR)")
    return path


@pytest.fixture(scope="session")
def catalog20():
    return generate_catalog(20, CPI_START, LAST, seed=7)


@pytest.fixture(scope="session")
def catalog6():
    return generate_catalog(6, CPI_START, LAST, seed=11)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
