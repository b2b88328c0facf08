import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jordanstab.algebra import AlgebraShape

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

SHAPES = [AlgebraShape((2,)), AlgebraShape((3,)), AlgebraShape((2, 3)), AlgebraShape((1, 2, 2))]

_ACCEPTANCE: list[tuple[int, bool, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def acceptance():
    """Record one line per acceptance criterion; printed in the terminal summary."""
    def record(number: int, ok: bool, detail: str):
        line = (number, bool(ok), detail)
        _ACCEPTANCE.append(line)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
