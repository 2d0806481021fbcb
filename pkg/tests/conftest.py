import numpy as np
import pytest

from radnls import build_grid
from radnls.profiles import GaussianMixture
from radnls.solver import SolverConfig, evolve


@pytest.fixture(scope="session")
def grid3():
    return build_grid(3, 20.0, 512)


@pytest.fixture(scope="session")
def gauss3(grid3):
    """e^{-r^2/2} in n=3."""
    return GaussianMixture.single(3).sample(grid3)


@pytest.fixture(scope="session")
def run1(grid3):
    """The reference run: u0 = 2 e^{-r^2}, dt = 1e-3, t_end = 0.5."""
    u0 = GaussianMixture.single(3, 2.0, 2**-0.5).sample(grid3)
    cfg = SolverConfig(dt=1e-3, t_end=0.5, record_stride=10)
    return evolve(u0, cfg, {"profile": "gaussian", "amplitude": 2.0, "width": 2**-0.5})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """criterion(k, ok, detail): print one line and keep it for the terminal summary."""
    store = request.config.stash.setdefault(CRITERIA, {})

    def record(k: int, ok: bool, detail: str) -> bool:
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
        store[k] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(CRITERIA, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for k in sorted(store):
            terminalreporter.write_line(store[k])
