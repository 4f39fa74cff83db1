from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from advgame.registry import load_registry  # noqa: E402

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def registry():
    return load_registry()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])


def pytest_runtest_logreport(report):
    # a criterion that raised before recording its own line still gets a FAIL entry
    if report.failed and "test_acceptance.py::test_criterion_" in report.nodeid:
        n = int(report.nodeid.split("test_criterion_")[1][:2])
        if n not in ACCEPTANCE:
            reason = str(report.longrepr).strip().splitlines()[-1][:120]
            ACCEPTANCE[n] = f"criterion {n:>2}: FAIL  errored before measuring ({reason})"
