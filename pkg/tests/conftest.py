import numpy as np
import pytest
from scipy.stats import special_ortho_group

_CRITERIA = []


def random_spd(rng, n, low=0.1, high=10.0):
    lam = rng.uniform(low, high, n)
    q = special_ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
    return (q * lam) @ q.T


def random_sym(rng, n):
    x = rng.standard_normal((n, n))
    return x + x.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed at session end."""

    def record(number, name, passed, detail=""):
        _CRITERIA.append((number, name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_CRITERIA):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {name}: {detail}")
