import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@st.composite
def profiles(draw, max_n=5, max_m=5, ties=True):
    """Nonnegative integer-valued profiles with a positive entry in every row."""
    n = draw(st.integers(2, max_n))
    m = draw(st.integers(2, max_m))
    hi = 6 if ties else 1000
    rows = []
    for _ in range(n):
        row = draw(st.lists(st.integers(0, hi), min_size=m, max_size=m).filter(lambda r: sum(r) > 0))
        rows.append(row)
    return np.array(rows, dtype=float)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
