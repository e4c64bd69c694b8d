import pytest

from postdev.dataset import missouri
from postdev.grid_posterior import build_grid
from postdev.pipeline import run_analysis

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def data():
    return missouri()


@pytest.fixture(scope="session")
def normal_grid(data):
    return build_grid(data, "normal")


@pytest.fixture(scope="session")
def beta_grid(data):
    return build_grid(data, "beta")


@pytest.fixture(scope="session")
def analysis(data):
    return run_analysis(data, T=10_000, seed=1)


@pytest.fixture(scope="session")
def report():
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
