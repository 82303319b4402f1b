import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pmsm_hybrid.analytic import DesignParams, MachineModel, SystemParams  # noqa: E402
from pmsm_hybrid.dataset import build_grid, generate  # noqa: E402


@pytest.fixture(scope="session")
def system():
    return SystemParams()


@pytest.fixture(scope="session")
def model(system):
    return MachineModel(i_sat=system.max_current)


@pytest.fixture(scope="session")
def grid(system):
    return build_grid(system.max_current)


@pytest.fixture(scope="session")
def midrange():
    return DesignParams.midrange()


@pytest.fixture(scope="session")
def small_ds():
    return generate(24, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.RESULTS):
        ok, detail = acceptance_log.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
