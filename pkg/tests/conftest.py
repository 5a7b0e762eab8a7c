import time
from contextlib import contextmanager

import pytest

# criterion name -> (passed, seconds, detail lines)
ACCEPTANCE = {}


@contextmanager
def criterion(name):
    """Record the outcome of one acceptance criterion; re-raises failures."""
    notes = []
    start = time.perf_counter()
    try:
        yield notes
    except BaseException as exc:
        ACCEPTANCE[name] = (False, time.perf_counter() - start, notes + [f"{type(exc).__name__}: {exc}"])
        raise
    ACCEPTANCE[name] = (True, time.perf_counter() - start, notes)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, (ok, secs, notes) in ACCEPTANCE.items():
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({secs:.2f}s)")
        for line in notes:
            tr.write_line(f"      {line}")


@pytest.fixture
def inc_space():
    from pgclabs.statespace import StateSpace
    from pgclabs.syntax import parse_model

    m = parse_model("var x : 0..3 wrap; skip")
    return StateSpace(m.decls)
