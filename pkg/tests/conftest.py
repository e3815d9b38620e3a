import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def vectors(size: int):
    return arrays(np.float64, (size,), elements=finite)


@st.composite
def metric_pairs(draw, n: int = 3):
    """Random (g, b) with g well-conditioned and b antisymmetric."""
    A = draw(arrays(np.float64, (n, n), elements=st.floats(-1.0, 1.0)))
    B = draw(arrays(np.float64, (n, n), elements=st.floats(-1.0, 1.0)))
    return A @ A.T + np.eye(n), B - B.T


def random_metric(rng: np.random.Generator, n: int = 3) -> tuple[np.ndarray, np.ndarray]:
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, n))
    return A @ A.T + 3.0 * np.eye(n), B - B.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
