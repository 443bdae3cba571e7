import numpy as np
import pytest

from fmps.grid import make_grid

_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Record the outcome of one acceptance criterion and assert on it.

    ``checks`` maps a clause description to ``(ok, detail)``. A summary line
    per criterion is printed at the end of the session.
    """

    def record(number: int, title: str, checks: dict) -> None:
        ok = all(v[0] for v in checks.values())
        details = "; ".join(f"{k}: {'ok' if v[0] else 'FAILED'} ({v[1]})" for k, v in checks.items())
        _CRITERIA[number] = (title, ok, details)
        failed = [k for k, v in checks.items() if not v[0]]
        assert not failed, f"criterion {number} failed clauses: {failed}\n{details}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}")
        terminalreporter.write_line(f"    {details}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid8():
    return make_grid((-8.0, 8.0), 200)
