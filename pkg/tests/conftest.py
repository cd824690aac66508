import numpy as np
import pytest

from imcsim.cells import BiasConfig, default_technology
from imcsim.config import WireConfig

UNIT = 4e-6


@pytest.fixture(scope="session")
def bias():
    return BiasConfig()


@pytest.fixture(scope="session")
def sram(bias):
    return default_technology("SRAM8T", bias)


@pytest.fixture(scope="session")
def fefet(bias):
    return default_technology("FeFET", bias)


@pytest.fixture(scope="session")
def wire():
    return WireConfig().model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _report(name: str, ok: bool, detail: str) -> bool:
        line = f"{name}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[1:s.index(":")])):
            terminalreporter.write_line(line)
