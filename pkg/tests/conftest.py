import numpy as np
import pytest


@pytest.fixture
def close():
    """Relative/absolute closeness with a readable failure message."""

    def check(actual, expected, rtol=0.0, atol=0.0):
        np.testing.assert_allclose(actual, expected, rtol=rtol, atol=atol)

    return check


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.split(".")[-1] == "test_acceptance"), None)
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
