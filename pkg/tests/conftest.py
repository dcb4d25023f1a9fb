import json
from pathlib import Path

import pytest

from tehomog.cell_problems import solve_cell_functions
from tehomog.periodic_media import named_profile

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden():
    return json.loads((DATA / "golden.json").read_text())


@pytest.fixture(scope="session")
def piecewise():
    return named_profile("piecewise24")


@pytest.fixture(scope="session")
def piecewise_cells(piecewise):
    return solve_cell_functions(piecewise)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_criterion():
    """Record one acceptance line; all lines are repeated in the terminal summary."""

    def record(number: int, passed: bool, detail: str, seconds: float, label: str = "") -> str:
        line = f"criterion {number:2d}{label}: {'PASS' if passed else 'FAIL'}  {detail}  [{seconds:.2f} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
