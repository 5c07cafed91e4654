import os

import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def positive(lo=0.05, hi=3.0):
    return st.floats(lo, hi, allow_nan=False, allow_infinity=False)


@st.composite
def model_params(draw, k_lo=0.0):
    from allelofear import ModelParams

    return ModelParams(
        a=draw(positive(0.05, 1.5)),
        b=draw(positive(0.05, 2.0)),
        c=draw(positive(0.1, 3.0)),
        k=draw(st.floats(k_lo, 5.0)),
        m=draw(st.floats(0.0, 3.0)),
    )


@pytest.fixture
def example_params():
    from allelofear import ModelParams

    return ModelParams(a=0.3, b=0.2, c=1.1, k=1.1, m=0.15)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
