import numpy as np
import pytest

from halfspace_neumann.grid import GridSpec
from halfspace_neumann.potentials import calibrated_constants

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion.

    ``checks`` maps a label to (value, ok).  The line is printed immediately and
    repeated in the terminal summary; the caller still asserts.
    """
    def record(number, title, checks):
        ok = all(bool(v[1]) for v in checks.values())
        parts = []
        for k, (val, good) in checks.items():
            if isinstance(val, float):
                val = f"{val:.4g}"
            parts.append(f"{k}={val}{'' if good else ' (!)'}")
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: " + "; ".join(parts)
        _ACCEPTANCE[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])


@pytest.fixture(scope="session")
def consts3():
    return calibrated_constants(3)


@pytest.fixture(scope="session")
def consts2():
    return calibrated_constants(2)


@pytest.fixture
def small_grid():
    return GridSpec(3, 4.0, 8, 2.0, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
