import time
from contextlib import contextmanager

import pytest

RESULTS = {}


@contextmanager
def criterion(k, limit):
    """Record a PASS/FAIL line for acceptance criterion ``k`` (runtime limit in seconds included)."""
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = time.perf_counter() - t0
        within = dt < limit
        status = "PASS" if ok and within else "FAIL"
        note = "" if within else f", over the {limit:g} s limit"
        RESULTS[k] = f"CRITERION {k}: {status} ({dt:.1f} s{note})"
        print(RESULTS[k])
    assert within, f"criterion {k} took {dt:.1f} s, limit {limit:g} s"


@pytest.fixture
def check():
    return criterion


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
