import numpy as np
import pytest

from ugaparity.oracle import OracleSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20130324)


@pytest.fixture
def psi_oracle():
    return OracleSpec(n=8, K=tuple(range(1, 8)), f="parity", eta="1/5")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines, key=lambda k: (int(k.rstrip("ab")), k)):
            terminalreporter.write_line(lines[key])
