import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from halfint.cusp import build_cusp_triple  # noqa: E402
from halfint.qforms import build_desk_form  # noqa: E402


@pytest.fixture(scope="session")
def form10k():
    return build_desk_form(10_000)


@pytest.fixture(scope="session")
def form100k():
    return build_desk_form(102_000)


@pytest.fixture(scope="session")
def triple20k():
    return build_cusp_triple(build_desk_form(20_000))


@pytest.fixture(scope="session")
def triple100k(form100k):
    return build_cusp_triple(form100k)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture()
def report_line():
    def emit(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
